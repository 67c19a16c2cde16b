#include "gchjb/linear_solve.hpp"

#include <cmath>
#include <utility>

#include <Eigen/SparseLU>

namespace gchjb {

bool solve_tridiagonal(std::vector<double> dl, std::vector<double> d, std::vector<double> du,
                       std::vector<double>& b) {
  const std::size_t n = d.size();
  if (n == 0) return true;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (std::abs(d[i]) >= std::abs(dl[i])) {
      if (d[i] == 0.0) return false;
      const double fact = dl[i] / d[i];
      d[i + 1] -= fact * du[i];
      b[i + 1] -= fact * b[i];
      dl[i] = 0.0;
    } else {
      // Swap rows i and i+1.
      const double fact = d[i] / dl[i];
      d[i] = dl[i];
      const double temp = d[i + 1];
      d[i + 1] = du[i] - fact * temp;
      if (i + 2 < n) {
        dl[i] = du[i + 1];
        du[i + 1] = -fact * dl[i];
      }
      du[i] = temp;
      std::swap(b[i], b[i + 1]);
      b[i + 1] -= fact * b[i];
    }
  }
  if (d[n - 1] == 0.0) return false;
  b[n - 1] /= d[n - 1];
  if (n > 1) b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / d[n - 2];
  if (n < 3) return true;
  for (std::size_t k = n - 2; k-- > 0;) {
    b[k] = (b[k] - du[k] * b[k + 1] - dl[k] * b[k + 2]) / d[k];
  }
  return true;
}

struct DirectSolver::Impl {
  bool tridiagonal = false;
  std::vector<double> lower, diag, upper;
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  bool analyzed = false;
};

DirectSolver::DirectSolver() : impl_(std::make_unique<Impl>()) {}
DirectSolver::~DirectSolver() = default;
DirectSolver::DirectSolver(DirectSolver&&) noexcept = default;
DirectSolver& DirectSolver::operator=(DirectSolver&&) noexcept = default;

bool DirectSolver::factorize(const Eigen::SparseMatrix<double>& m) {
  const Eigen::Index n = m.rows();
  bool banded = true;
  for (Eigen::Index col = 0; col < m.outerSize() && banded; ++col) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(m, col); it; ++it) {
      if (std::abs(it.row() - it.col()) > 1) {
        banded = false;
        break;
      }
    }
  }
  impl_->tridiagonal = banded;
  if (banded) {
    impl_->diag.assign(n, 0.0);
    impl_->lower.assign(n > 0 ? n - 1 : 0, 0.0);
    impl_->upper.assign(n > 0 ? n - 1 : 0, 0.0);
    for (Eigen::Index col = 0; col < m.outerSize(); ++col) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(m, col); it; ++it) {
        if (it.row() == it.col()) {
          impl_->diag[it.row()] = it.value();
        } else if (it.row() == it.col() + 1) {
          impl_->lower[it.col()] = it.value();
        } else {
          impl_->upper[it.row()] = it.value();
        }
      }
    }
    for (double v : impl_->diag) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }
  if (!impl_->analyzed) {
    impl_->lu.analyzePattern(m);
    impl_->analyzed = true;
  }
  impl_->lu.factorize(m);
  return impl_->lu.info() == Eigen::Success;
}

Eigen::VectorXd DirectSolver::solve(const Eigen::VectorXd& rhs) const {
  if (impl_->tridiagonal) {
    std::vector<double> b(rhs.data(), rhs.data() + rhs.size());
    if (!solve_tridiagonal(impl_->lower, impl_->diag, impl_->upper, b)) {
      return Eigen::VectorXd::Constant(rhs.size(), std::nan(""));
    }
    return Eigen::Map<Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size()));
  }
  return impl_->lu.solve(rhs);
}

}  // namespace gchjb
