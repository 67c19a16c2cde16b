#include "gchjb/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <set>

namespace gchjb {

namespace {

bool inside_margin(const Grid& g, int i, int j, int margin) {
  const int m = std::max(margin, 1);
  if (i < m || i > g.n[0] + 1 - m) return false;
  if (g.dim == 2 && (j < m || j > g.n[1] + 1 - m)) return false;
  return true;
}

double sup_diff(const GridFunction& a, const GridFunction& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.values().size(); ++k) {
    m = std::max(m, std::abs(a.values()[k] - b.values()[k]));
  }
  return m;
}

double h_min(const Grid& g) { return g.dim == 1 ? g.h[0] : std::min(g.h[0], g.h[1]); }

}  // namespace

SandwichResult sandwich_check(const GridFunction& u, const GridFunction& u_bar, double tol) {
  if (!u.grid().same_shape(u_bar.grid())) throw InputError("sandwich check needs the same grid");
  SandwichResult r;
  for (std::size_t k = 0; k < u.values().size(); ++k) {
    const double v = u.values()[k];
    const double top = u_bar.values()[k];
    r.max_violation = std::max({r.max_violation, -v, v - top});
    r.max_gap = std::max(r.max_gap, top - v);
    if (v < top - tol) r.strictly_below = true;
  }
  r.pass = r.max_violation <= tol;
  return r;
}

int FreeBoundaryMask::count(Activity a) const {
  return static_cast<int>(std::count(flags.begin(), flags.end(), static_cast<int>(a)));
}

FreeBoundaryMask free_boundary(const DiscreteOperator& op, const GridFunction& u,
                               const ConstraintFunction& h, double tol) {
  FreeBoundaryMask mask;
  mask.grid = op.grid;
  mask.tol = tol;
  mask.flags = activity_mask(op, h, u, tol);
  const Grid& g = op.grid;
  const auto in_region = [&](int i, int j) { return mask.flags[g.unknown(i, j)] != kPdeActive; };
  for (std::size_t k = 0; k < g.interior_size(); ++k) {
    const auto [i, j] = g.node_of(k);
    for (int axis = 0; axis < g.dim; ++axis) {
      const int ni = axis == 0 ? i + 1 : i;
      const int nj = axis == 0 ? j : j + 1;
      if (g.on_boundary(ni, nj)) continue;
      if (in_region(i, j) == in_region(ni, nj)) continue;
      Vec p = Vec::Zero();
      p(0) = g.coord(0, i) + (axis == 0 ? 0.5 * g.h[0] : 0.0);
      if (g.dim == 2) p(1) = g.coord(1, j) + (axis == 1 ? 0.5 * g.h[1] : 0.0);
      mask.interface_points.push_back(p);
    }
  }
  return mask;
}

int mask_symmetry_defect(const FreeBoundaryMask& mask) {
  const Grid& g = mask.grid;
  std::vector<std::array<int, 2>> active;
  for (std::size_t k = 0; k < mask.flags.size(); ++k) {
    if (mask.flags[k] != kPdeActive) active.push_back(g.node_of(k));
  }
  if (active.empty()) return 0;

  const int n0 = g.n[0] + 1;
  const int n1 = g.n[1] + 1;
  std::vector<std::function<std::array<int, 2>(int, int)>> maps;
  if (g.dim == 1) {
    maps.push_back([=](int i, int j) { return std::array<int, 2>{n0 - i, j}; });
  } else {
    maps.push_back([=](int i, int j) { return std::array<int, 2>{n0 - i, j}; });
    maps.push_back([=](int i, int j) { return std::array<int, 2>{i, n1 - j}; });
    maps.push_back([=](int i, int j) { return std::array<int, 2>{n0 - i, n1 - j}; });
    if (g.n[0] == g.n[1]) {
      maps.push_back([](int i, int j) { return std::array<int, 2>{j, i}; });
      maps.push_back([=](int i, int j) { return std::array<int, 2>{n1 - j, i}; });
      maps.push_back([=](int i, int j) { return std::array<int, 2>{j, n0 - i}; });
      maps.push_back([=](int i, int j) { return std::array<int, 2>{n1 - j, n0 - i}; });
    }
  }

  const auto is_active = [&](int i, int j) {
    if (i < 1 || i > g.n[0]) return false;
    if (g.dim == 2 && (j < 1 || j > g.n[1])) return false;
    return mask.flags[g.unknown(i, j)] != kPdeActive;
  };
  const int max_radius = std::max(g.n[0], g.dim == 2 ? g.n[1] : 0);
  int defect = 0;
  for (const auto& map : maps) {
    for (const auto& node : active) {
      const auto img = map(node[0], node[1]);
      int found = -1;
      for (int r = 0; r <= max_radius && found < 0; ++r) {
        const int jr = g.dim == 2 ? r : 0;
        for (int di = -r; di <= r && found < 0; ++di) {
          for (int dj = -jr; dj <= jr; ++dj) {
            if (std::max(std::abs(di), std::abs(dj)) != r) continue;
            if (is_active(img[0] + di, img[1] + dj)) {
              found = r;
              break;
            }
          }
        }
      }
      if (found < 0) return -1;
      defect = std::max(defect, found);
    }
  }
  return defect;
}

double gradient_sup(const GridFunction& u, int margin_cells) {
  const Grid& g = u.grid();
  const auto du = gradient(u);
  double m = 0.0;
  for (std::size_t k = 0; k < du.size(); ++k) {
    const auto [i, j] = g.node_of(k);
    if (inside_margin(g, i, j, margin_cells)) m = std::max(m, du[k].norm());
  }
  return m;
}

double second_difference_sup(const GridFunction& u, int margin_cells) {
  const Grid& g = u.grid();
  double m = 0.0;
  for (std::size_t k = 0; k < g.interior_size(); ++k) {
    const auto [i, j] = g.node_of(k);
    if (!inside_margin(g, i, j, margin_cells)) continue;
    m = std::max(m, std::abs(u.at(i + 1, j) - 2.0 * u.at(i, j) + u.at(i - 1, j)) / (g.h[0] * g.h[0]));
    if (g.dim == 2) {
      m = std::max(m, std::abs(u.at(i, j + 1) - 2.0 * u.at(i, j) + u.at(i, j - 1)) / (g.h[1] * g.h[1]));
    }
  }
  return m;
}

std::pair<double, double> fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) return {0.0, 0.0};
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    mx += x[k];
    my += y[k];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    sxx += (x[k] - mx) * (x[k] - mx);
    sxy += (x[k] - mx) * (y[k] - my);
    syy += (y[k] - my) * (y[k] - my);
  }
  if (sxx == 0.0) return {0.0, 0.0};
  const double slope = sxy / sxx;
  const double r2 = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return {slope, r2};
}

HolderFit holder_fit(const GridFunction& u, int margin_cells) {
  const Grid& g = u.grid();
  const auto du = gradient(u);
  const int m = std::max(margin_cells, 1);
  // Largest separation: a quarter of the retained extent along the shorter axis.
  int extent = g.n[0] + 2 - 2 * m;
  if (g.dim == 2) extent = std::min(extent, g.n[1] + 2 - 2 * m);
  HolderFit fit;
  fit.min_pairs = std::numeric_limits<int>::max();
  std::vector<double> xs, ys;
  for (int step = 1; step <= extent / 4; step *= 2) {
    double omega = 0.0;
    int pairs = 0;
    for (std::size_t k = 0; k < du.size(); ++k) {
      const auto [i, j] = g.node_of(k);
      if (!inside_margin(g, i, j, m)) continue;
      for (int axis = 0; axis < g.dim; ++axis) {
        const int ni = axis == 0 ? i + step : i;
        const int nj = axis == 0 ? j : j + step;
        if (!inside_margin(g, ni, nj, m)) continue;
        omega = std::max(omega, (du[k] - du[g.unknown(ni, nj)]).norm());
        ++pairs;
      }
    }
    if (pairs < 10) break;
    if (omega <= 0.0) continue;
    xs.push_back(std::log(step * h_min(g)));
    ys.push_back(std::log(omega));
    fit.min_pairs = std::min(fit.min_pairs, pairs);
  }
  if (xs.empty()) fit.min_pairs = 0;
  fit.scales = static_cast<int>(xs.size());
  const auto [slope, r2] = fit_line(xs, ys);
  fit.alpha = slope;
  fit.r_squared = r2;
  return fit;
}

bool RegularityReport::bounded_in_eps(double threshold) const {
  for (const auto& [h, spread] : second_diff_spread) {
    if (!(spread < threshold)) return false;
  }
  return true;
}

RegularityReport regularity_scan(const std::vector<RegularityRun>& runs, int margin_cells) {
  if (margin_cells < 1) throw InputError("regularity margin must be at least one cell");
  std::set<double> eps_values;
  std::set<double> h_values;
  for (const auto& r : runs) {
    eps_values.insert(r.eps);
    h_values.insert(h_min(r.u.grid()));
  }
  if (eps_values.size() < 3 || h_values.size() < 2) {
    throw InputError("insufficient data: regularity scan needs 3 eps values and 2 grid spacings");
  }

  RegularityReport report;
  report.interior_margin = std::numeric_limits<double>::infinity();
  std::map<double, std::pair<double, double>> per_h;  // h -> (min, max) second difference
  std::vector<double> alphas;
  for (const auto& r : runs) {
    RegularityRow row;
    row.eps = r.eps;
    row.h = h_min(r.u.grid());
    row.sup_grad = gradient_sup(r.u, margin_cells);
    row.sup_second_diff = second_difference_sup(r.u, margin_cells);
    row.holder = holder_fit(r.u, margin_cells);
    report.interior_margin = std::min(report.interior_margin, margin_cells * row.h);
    report.sup_grad = std::max(report.sup_grad, row.sup_grad);
    report.sup_second_diff = std::max(report.sup_second_diff, row.sup_second_diff);
    if (row.holder.scales >= 2) alphas.push_back(row.holder.alpha);
    auto [it, fresh] = per_h.try_emplace(row.h, row.sup_second_diff, row.sup_second_diff);
    if (!fresh) {
      it->second.first = std::min(it->second.first, row.sup_second_diff);
      it->second.second = std::max(it->second.second, row.sup_second_diff);
    }
    report.rows.push_back(row);
  }
  for (const auto& [h, range] : per_h) {
    const double spread = range.first > 0.0 ? (range.second - range.first) / range.first
                                            : (range.second > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    report.second_diff_spread.emplace_back(h, spread);
  }
  if (!alphas.empty()) {
    std::sort(alphas.begin(), alphas.end());
    const double median = alphas[alphas.size() / 2];
    report.holder_alpha_estimate = std::clamp(median, std::numeric_limits<double>::min(), 1.0);
  }
  return report;
}

bool ComparisonReport::all_passed() const {
  return std::all_of(rows.begin(), rows.end(), [](const ComparisonRow& r) { return r.pass; });
}

ComparisonReport comparison_test(const EllipticProblem& problem, const ConstraintFunction& h,
                                 const ContinuationSchedule& schedule, std::array<int, 2> shape,
                                 const std::vector<OrderedPair>& pairs, double tol) {
  const Grid grid = problem.grid(shape);
  const auto with_data = [&](const std::string& f, const std::string& g) {
    EllipticProblem p = problem;
    if (!f.empty()) p.f = Expression::parse(f);
    if (!g.empty()) p.g = Expression::parse(g);
    return p;
  };

  ComparisonReport report;
  for (const auto& pair : pairs) {
    const EllipticProblem low = with_data(pair.f_low, pair.g_low);
    const EllipticProblem high = with_data(pair.f_high, pair.g_high);
    for (std::size_t k = 0; k < grid.full_size(); ++k) {
      const int i = grid.dim == 1 ? static_cast<int>(k) : static_cast<int>(k / static_cast<std::size_t>(grid.n[1] + 2));
      const int j = grid.dim == 1 ? 0 : static_cast<int>(k % static_cast<std::size_t>(grid.n[1] + 2));
      const double x1 = grid.coord(0, i);
      const double x2 = grid.dim == 2 ? grid.coord(1, j) : 0.0;
      if (low.f.eval(x1, x2) > high.f.eval(x1, x2)) throw InputError("comparison pair: f data not ordered");
      if (grid.on_boundary(i, j) && low.g.eval(x1, x2) > high.g.eval(x1, x2)) {
        throw InputError("comparison pair: boundary data not ordered");
      }
    }
    const SolveReport a = solve_constrained(low, h, schedule, shape);
    const SolveReport b = solve_constrained(high, h, schedule, shape);
    ComparisonRow row;
    row.pair = pair;
    for (std::size_t k = 0; k < a.u.values().size(); ++k) {
      row.max_violation = std::max(row.max_violation, a.u.values()[k] - b.u.values()[k]);
    }
    row.pass = row.max_violation <= tol;
    report.rows.push_back(row);
  }
  return report;
}

StudyResult convergence_study(const EllipticProblem& problem, const ConstraintFunction& h,
                              const ContinuationSchedule& schedule,
                              const std::vector<std::array<int, 2>>& shapes,
                              const std::optional<Expression>& exact) {
  if (shapes.size() < 3) throw InputError("insufficient data: convergence study needs 3 grid levels");
  const std::vector<double> eps_list = effective_eps(schedule, h);
  if (eps_list.size() < 3) throw InputError("insufficient data: convergence study needs 3 eps levels");

  std::vector<std::array<int, 2>> sorted = shapes;
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a[0] < b[0]; });

  ConstrainedOptions opts;
  opts.keep_stages = true;
  std::vector<std::vector<GridFunction>> sols;  // [level][eps]
  for (const auto& shape : sorted) {
    sols.push_back(solve_constrained(problem, h, schedule, shape, opts).stage_solutions);
  }
  const std::size_t levels = sorted.size();
  const std::size_t n_eps = eps_list.size();
  const GridFunction& reference = sols.back().back();
  const Grid& fine = reference.grid();

  // Reference grid nesting: coarse node i sits at fine node i * ratio.
  std::vector<std::array<int, 2>> ratio(levels);
  if (!exact) {
    for (std::size_t l = 0; l < levels; ++l) {
      for (int axis = 0; axis < fine.dim; ++axis) {
        const int nc = sorted[l][static_cast<std::size_t>(axis)] + 1;
        const int nf = fine.n[static_cast<std::size_t>(axis)] + 1;
        if (nf % nc != 0) throw InputError("grid levels do not nest inside the finest level");
        ratio[l][static_cast<std::size_t>(axis)] = nf / nc;
      }
      if (fine.dim == 1) ratio[l][1] = 1;
    }
  }
  const auto ref_gradient = gradient(reference);
  const double delta = 1e-6;

  StudyResult result;
  for (std::size_t l = 0; l < levels; ++l) {
    for (std::size_t e = 0; e < n_eps; ++e) {
      const GridFunction& u = sols[l][e];
      const Grid& g = u.grid();
      const auto du = gradient(u);
      StudyRow row;
      row.level = static_cast<int>(l);
      row.h = h_min(g);
      row.eps = eps_list[e];
      for (std::size_t k = 0; k < g.interior_size(); ++k) {
        const auto [i, j] = g.node_of(k);
        double ref_value;
        Vec ref_grad = Vec::Zero();
        if (exact) {
          const double x1 = g.coord(0, i);
          const double x2 = g.dim == 2 ? g.coord(1, j) : 0.0;
          ref_value = exact->eval(x1, x2);
          ref_grad(0) = (exact->eval(x1 + delta, x2) - exact->eval(x1 - delta, x2)) / (2 * delta);
          if (g.dim == 2) {
            ref_grad(1) = (exact->eval(x1, x2 + delta) - exact->eval(x1, x2 - delta)) / (2 * delta);
          }
        } else {
          const int fi = i * ratio[l][0];
          const int fj = g.dim == 2 ? j * ratio[l][1] : 0;
          ref_value = reference.at(fi, fj);
          ref_grad = ref_gradient[fine.unknown(fi, g.dim == 2 ? fj : 1)];
        }
        row.value_error = std::max(row.value_error, std::abs(u.at(i, j) - ref_value));
        row.gradient_error = std::max(row.gradient_error, (du[k] - ref_grad).norm());
      }
      result.rows.push_back(row);
    }
  }

  const auto rate = [](const std::vector<double>& x, const std::vector<double>& err) {
    std::vector<double> lx, ly;
    for (std::size_t k = 0; k < x.size(); ++k) {
      if (err[k] > 0.0) {
        lx.push_back(std::log(x[k]));
        ly.push_back(std::log(err[k]));
      }
    }
    return fit_line(lx, ly).first;
  };
  {
    const std::size_t used = exact ? levels : levels - 1;
    std::vector<double> hs, ve, ge;
    for (std::size_t l = 0; l < used; ++l) {
      const StudyRow& r = result.rows[l * n_eps + n_eps - 1];
      hs.push_back(r.h);
      ve.push_back(r.value_error);
      ge.push_back(r.gradient_error);
    }
    result.value_rate_h = rate(hs, ve);
    result.gradient_rate_h = rate(hs, ge);
  }
  {
    const std::size_t used = exact ? n_eps : n_eps - 1;
    std::vector<double> es, ve, ge;
    for (std::size_t e = 0; e < used; ++e) {
      const StudyRow& r = result.rows[(levels - 1) * n_eps + e];
      es.push_back(r.eps);
      ve.push_back(r.value_error);
      ge.push_back(r.gradient_error);
    }
    result.value_rate_eps = rate(es, ve);
    result.gradient_rate_eps = rate(es, ge);
  }
  for (std::size_t e = 0; e + 1 < n_eps; ++e) {
    result.eps_increments.push_back(sup_diff(sols.back()[e], sols.back()[e + 1]));
  }
  if (!exact) result.reference_consistency = result.rows[(levels - 2) * n_eps + n_eps - 1].value_error;
  return result;
}

}  // namespace gchjb
