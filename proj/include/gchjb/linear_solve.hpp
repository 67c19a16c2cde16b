// Direct solvers for the interior systems: a pivoted tridiagonal elimination
// for 1D matrices and sparse LU otherwise.
#pragma once

#include <memory>
#include <vector>

#include <Eigen/Sparse>

namespace gchjb {

// Solves a tridiagonal system with partial pivoting (the LAPACK gtsv scheme).
// `lower` and `upper` have n-1 entries. Returns false if the matrix is singular.
bool solve_tridiagonal(std::vector<double> lower, std::vector<double> diag,
                       std::vector<double> upper, std::vector<double>& rhs);

// Factorizes matrices that share one sparsity pattern.
class DirectSolver {
 public:
  DirectSolver();
  ~DirectSolver();
  DirectSolver(DirectSolver&&) noexcept;
  DirectSolver& operator=(DirectSolver&&) noexcept;

  // Returns false if the matrix is numerically singular.
  bool factorize(const Eigen::SparseMatrix<double>& matrix);
  // Requires a successful factorize().
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace gchjb
