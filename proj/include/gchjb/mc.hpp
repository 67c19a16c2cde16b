// Monte Carlo estimate of the 1D singular-control value function
//   u(x) = inf E^x int_0^tau exp(-int_0^t c) [f(X) dt + l(rho) dxi],
//   dX = -b dt + sigma dW - rho dxi,
// under the policy read off a solved free boundary.
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "gchjb/convex.hpp"
#include "gchjb/operator.hpp"
#include "gchjb/solver.hpp"

namespace gchjb {

// sigma(x) = sqrt(2 a(x)) for a 1D problem.
std::function<double(double)> sigma_from_a(const EllipticProblem& problem);

// l(+1) or l(-1) for a 1D body.
double support_cost(const ConvexBody& body, int direction);

// An interval where the control acts. A state entering it is moved by
// -rho * dxi, i.e. towards `hi` when rho = -1 and towards `lo` when rho = +1,
// until it leaves the band; a band reaching the domain edge ends the path.
struct PolicyBand {
  double lo = 0.0;
  double hi = 0.0;
  int rho = 0;
};

class ControlPolicy {
 public:
  // No control: the state diffuses until it leaves (lo, hi).
  static ControlPolicy uncontrolled(double lo, double hi);
  // Continuation region [region_lo, region_hi]; the two outer bands push the
  // state out through the nearer domain edge.
  static ControlPolicy from_region(double lo, double hi, double region_lo, double region_hi);
  // Bands are the runs of constraint-active nodes of a 1D solve; each pushes
  // in the descent direction -sign(D_h u) and ends halfway to the next node.
  static ControlPolicy from_solution(const SolveReport& report);

  // Widens every band by `delta` into the adjacent continuation region.
  ControlPolicy shrunk(double delta) const;

  double lo() const { return lo_; }
  double hi() const { return hi_; }
  const std::vector<PolicyBand>& bands() const { return bands_; }
  // Index of the band containing x, or -1.
  int band_of(double x) const;
  // Maximal intervals where no control acts.
  std::vector<std::pair<double, double>> continuation() const;

 private:
  ControlPolicy(double lo, double hi, std::vector<PolicyBand> bands);

  double lo_ = 0.0;
  double hi_ = 0.0;
  std::vector<PolicyBand> bands_;
};

struct McOptions {
  int n_paths = 100000;
  double dt = 1e-4;
  std::uint64_t seed = 1;
  int threads = 0;  // 0: hardware concurrency
  // Paths stop once the discount factor drops below this.
  double discount_floor = 1e-12;
};

struct McEstimate {
  double x0 = 0.0;
  double mean = 0.0;
  double std_error = 0.0;  // sample std / sqrt(n_paths)
  int n_paths = 0;
  double dt = 0.0;
  std::uint64_t seed = 0;
  std::vector<std::string> warnings;
};

// Throws InputError for a 2D problem, n_paths < 100, dt <= 0 or x0 outside
// the continuation region.
McEstimate estimate_value(const EllipticProblem& problem, const ControlPolicy& policy,
                          const ConvexBody& body, double x0, const McOptions& options);

struct ControlledPath {
  double dt = 0.0;
  std::vector<double> x;    // state after each step, x[0] = x0
  std::vector<double> xi;   // cumulative control
  std::vector<int> rho;     // direction of the control at each step, 0 when idle
  double running_cost = 0.0;
  double control_cost = 0.0;
  double discount = 1.0;
  bool exited = false;
};

// Path `index` of the stream that estimate_value draws for the same seed.
ControlledPath trace_path(const EllipticProblem& problem, const ControlPolicy& policy,
                          const ConvexBody& body, double x0, double dt, std::uint64_t seed,
                          std::uint64_t index, int max_steps = 1000000);

}  // namespace gchjb
