#include "gchjb/mc.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <random>
#include <sstream>
#include <thread>

namespace gchjb {

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::mt19937_64 path_engine(std::uint64_t seed, std::uint64_t index) {
  return std::mt19937_64(splitmix64(seed ^ splitmix64(index)));
}

// Coefficient lookups with constant fast paths.
class Field {
 public:
  explicit Field(const Expression& e) : expr_(&e), constant_(e.is_constant()) {
    if (constant_) value_ = e.eval(0.0);
  }
  double operator()(double x) const { return constant_ ? value_ : expr_->eval(x); }
  bool zero() const { return constant_ && value_ == 0.0; }

 private:
  const Expression* expr_;
  bool constant_;
  double value_ = 0.0;
};

struct Coefficients {
  Field a, b, c, f;
  explicit Coefficients(const EllipticProblem& p) : a(p.a[0]), b(p.b[0]), c(p.c), f(p.f) {}
};

struct PathTotals {
  double cost = 0.0;
  double running = 0.0;
  double control = 0.0;
  double discount = 1.0;
  bool exited = false;
};

struct NoTrace {
  void step(double, double, int) {}
};

struct Tracer {
  ControlledPath* out;
  double xi = 0.0;
  void step(double x, double dxi, int rho) {
    xi += dxi;
    out->x.push_back(x);
    out->xi.push_back(xi);
    out->rho.push_back(dxi > 0.0 ? rho : 0);
  }
};

template <class Trace>
PathTotals run_path(const Coefficients& k, const ControlPolicy& policy, const double cost_of[2],
                    double x, double dt, std::mt19937_64& rng, double discount_floor, long max_steps,
                    Trace& trace) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const double sqdt = std::sqrt(dt);
  const double lo = policy.lo();
  const double hi = policy.hi();
  PathTotals t;
  for (long step = 0; step < max_steps; ++step) {
    const double a = k.a(x);
    if (!(a > 0.0)) throw InputError("ellipticity violated along a simulated path");
    const double sigma = std::sqrt(2.0 * a);
    t.running += t.discount * k.f(x) * dt;
    const double drift = k.b.zero() ? 0.0 : k.b(x);
    const double next_discount = t.discount * std::exp(-k.c(x) * dt);
    x += -drift * dt + sigma * sqdt * normal(rng);
    t.discount = next_discount;
    if (x <= lo || x >= hi) {
      t.exited = true;
      trace.step(std::clamp(x, lo, hi), 0.0, 0);
      break;
    }
    const int band = policy.band_of(x);
    if (band >= 0) {
      const PolicyBand& bd = policy.bands()[static_cast<std::size_t>(band)];
      const double target = bd.rho < 0 ? bd.hi : bd.lo;
      const double dxi = std::abs(target - x);
      t.control += t.discount * cost_of[bd.rho > 0 ? 1 : 0] * dxi;
      x = target;
      if (x <= lo || x >= hi) {
        t.exited = true;
        trace.step(x, dxi, bd.rho);
        break;
      }
      trace.step(x, dxi, bd.rho);
    } else {
      trace.step(x, 0.0, 0);
    }
    if (t.discount < discount_floor) break;
  }
  t.cost = t.running + t.control;
  return t;
}

void check_inputs(const EllipticProblem& problem, const ControlPolicy& policy, const ConvexBody& body,
                  double x0, double dt) {
  if (problem.dim != 1) throw InputError("Monte Carlo simulation is one-dimensional only");
  if (body.dim() != 1) throw InputError("Monte Carlo needs a 1D convex body");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InputError("dt must be positive");
  if (!(x0 > policy.lo() && x0 < policy.hi())) throw InputError("x0 outside the domain");
  if (policy.band_of(x0) >= 0) throw InputError("x0 outside the continuation region");
}

}  // namespace

std::function<double(double)> sigma_from_a(const EllipticProblem& problem) {
  if (problem.dim != 1) throw InputError("sigma_from_a expects a 1D problem");
  const Expression a = problem.a.at(0);
  return [a](double x) {
    const double v = a.eval(x);
    if (!(v > 0.0)) throw InputError("ellipticity violated");
    return std::sqrt(2.0 * v);
  };
}

double support_cost(const ConvexBody& body, int direction) {
  if (body.dim() != 1) throw InputError("support_cost expects a 1D body");
  if (direction != 1 && direction != -1) throw InputError("direction must be +1 or -1");
  return support_value(body, Vec(static_cast<double>(direction), 0.0));
}

ControlPolicy::ControlPolicy(double lo, double hi, std::vector<PolicyBand> bands)
    : lo_(lo), hi_(hi), bands_(std::move(bands)) {
  if (!(lo < hi)) throw InputError("policy domain is empty");
  std::sort(bands_.begin(), bands_.end(), [](const auto& a, const auto& b) { return a.lo < b.lo; });
  for (std::size_t k = 0; k < bands_.size(); ++k) {
    const auto& b = bands_[k];
    if (!(b.lo < b.hi) || b.lo < lo || b.hi > hi) throw InputError("policy band outside the domain");
    if (b.rho != 1 && b.rho != -1) throw InputError("policy band direction must be +1 or -1");
    if (k > 0 && b.lo < bands_[k - 1].hi) throw InputError("policy bands overlap");
  }
}

ControlPolicy ControlPolicy::uncontrolled(double lo, double hi) { return ControlPolicy(lo, hi, {}); }

ControlPolicy ControlPolicy::from_region(double lo, double hi, double region_lo, double region_hi) {
  if (!(lo <= region_lo && region_lo < region_hi && region_hi <= hi)) {
    throw InputError("policy region must be a non-empty subinterval of the domain");
  }
  std::vector<PolicyBand> bands;
  if (region_lo > lo) bands.push_back({lo, region_lo, +1});
  if (region_hi < hi) bands.push_back({region_hi, hi, -1});
  return ControlPolicy(lo, hi, std::move(bands));
}

ControlPolicy ControlPolicy::from_solution(const SolveReport& report) {
  const Grid& g = report.u.grid();
  if (g.dim != 1) throw InputError("policy extraction is one-dimensional only");
  if (report.free_boundary_mask.size() != g.interior_size()) throw InputError("free boundary required");
  const auto du = gradient(report.u);
  std::vector<PolicyBand> bands;
  const int n = g.n[0];
  int i = 1;
  while (i <= n) {
    if (report.free_boundary_mask[g.unknown(i)] != kConstraintActive) {
      ++i;
      continue;
    }
    const int first = i;
    double slope = 0.0;
    while (i <= n && report.free_boundary_mask[g.unknown(i)] == kConstraintActive) {
      slope += du[g.unknown(i)](0);
      ++i;
    }
    const int last = i - 1;
    const double lo = first == 1 ? g.lo[0] : g.coord(0, first) - 0.5 * g.h[0];
    const double hi = last == n ? g.hi[0] : g.coord(0, last) + 0.5 * g.h[0];
    // Moving by -rho lowers u where rho has the sign of u'.
    bands.push_back({lo, hi, slope >= 0.0 ? 1 : -1});
  }
  return ControlPolicy(g.lo[0], g.hi[0], std::move(bands));
}

ControlPolicy ControlPolicy::shrunk(double delta) const {
  if (!(delta >= 0.0)) throw InputError("shrink distance must be non-negative");
  std::vector<PolicyBand> bands = bands_;
  for (auto& b : bands) {
    if (b.lo > lo_) b.lo = std::max(lo_, b.lo - delta);
    if (b.hi < hi_) b.hi = std::min(hi_, b.hi + delta);
  }
  for (std::size_t k = 1; k < bands.size(); ++k) {
    if (!(bands[k].lo > bands[k - 1].hi)) throw InputError("shrinking removes a continuation interval");
  }
  ControlPolicy out(lo_, hi_, std::move(bands));
  if (out.continuation().size() != continuation().size()) {
    throw InputError("shrinking removes a continuation interval");
  }
  return out;
}

int ControlPolicy::band_of(double x) const {
  for (std::size_t k = 0; k < bands_.size(); ++k) {
    const auto& b = bands_[k];
    // Open inner edges: the continuation region is closed.
    const bool above = b.lo == lo_ ? x >= b.lo : x > b.lo;
    const bool below = b.hi == hi_ ? x <= b.hi : x < b.hi;
    if (above && below) return static_cast<int>(k);
  }
  return -1;
}

std::vector<std::pair<double, double>> ControlPolicy::continuation() const {
  std::vector<std::pair<double, double>> out;
  double left = lo_;
  for (const auto& b : bands_) {
    if (b.lo > left) out.emplace_back(left, b.lo);
    left = b.hi;
  }
  if (left < hi_) out.emplace_back(left, hi_);
  return out;
}

McEstimate estimate_value(const EllipticProblem& problem, const ControlPolicy& policy,
                          const ConvexBody& body, double x0, const McOptions& options) {
  check_inputs(problem, policy, body, x0, options.dt);
  if (options.n_paths < 100) throw InputError("n_paths must be at least 100");

  McEstimate est;
  est.x0 = x0;
  est.n_paths = options.n_paths;
  est.dt = options.dt;
  est.seed = options.seed;

  const Coefficients coeffs(problem);
  const double cost_of[2] = {support_cost(body, -1), support_cost(body, +1)};
  const auto sigma = sigma_from_a(problem);
  for (const auto& [a, b] : policy.continuation()) {
    const double s = std::max(sigma(a), std::max(sigma(0.5 * (a + b)), sigma(b)));
    if (b - a < 2.0 * s * std::sqrt(options.dt)) {
      std::ostringstream os;
      os << "dt too large: continuation interval [" << a << ", " << b << "] is narrower than 2 sigma sqrt(dt)";
      est.warnings.push_back(os.str());
    }
  }

  const long max_steps = 1L << 40;
  std::vector<double> cost(static_cast<std::size_t>(options.n_paths));
  unsigned threads = options.threads > 0 ? static_cast<unsigned>(options.threads)
                                         : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(options.n_paths));
  std::vector<std::exception_ptr> errors(threads);
  const auto worker = [&](unsigned w) {
    try {
      NoTrace none;
      for (std::size_t p = w; p < cost.size(); p += threads) {
        auto rng = path_engine(options.seed, p);
        cost[p] = run_path(coeffs, policy, cost_of, x0, options.dt, rng, options.discount_floor,
                           max_steps, none)
                      .cost;
      }
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  if (threads == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w) pool.emplace_back(worker, w);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  // Path-order reduction keeps the result independent of the thread count.
  double sum = 0.0;
  for (double v : cost) sum += v;
  const double n = static_cast<double>(cost.size());
  est.mean = sum / n;
  double ss = 0.0;
  for (double v : cost) ss += (v - est.mean) * (v - est.mean);
  est.std_error = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  return est;
}

ControlledPath trace_path(const EllipticProblem& problem, const ControlPolicy& policy,
                          const ConvexBody& body, double x0, double dt, std::uint64_t seed,
                          std::uint64_t index, int max_steps) {
  check_inputs(problem, policy, body, x0, dt);
  const Coefficients coeffs(problem);
  const double cost_of[2] = {support_cost(body, -1), support_cost(body, +1)};
  ControlledPath path;
  path.dt = dt;
  path.x.push_back(x0);
  path.xi.push_back(0.0);
  path.rho.push_back(0);
  Tracer tracer{&path};
  auto rng = path_engine(seed, index);
  const PathTotals t = run_path(coeffs, policy, cost_of, x0, dt, rng, 1e-12, max_steps, tracer);
  path.running_cost = t.running;
  path.control_cost = t.control;
  path.discount = t.discount;
  path.exited = t.exited;
  return path;
}

}  // namespace gchjb
