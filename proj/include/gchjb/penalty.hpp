// Penalty family beta_eps(z) = phi(z/eps) with the bridge
//   phi(s) = 0 for s <= 0,  s^2/4 for 0 <= s <= 2,  s - 1 for s >= 2,
// so beta_eps vanishes for z <= 0 and equals (z - eps)/eps for z >= 2 eps.
#pragma once

#include "gchjb/errors.hpp"

namespace gchjb {

class PenaltyFamily {
 public:
  enum class Bridge {
    kQuadratic,
    // Concave on [0, 2]; violates convexity. Used to exercise the
    // certification checks.
    kConcaveStub,
  };

  explicit PenaltyFamily(double epsilon, Bridge bridge = Bridge::kQuadratic);

  double epsilon() const { return epsilon_; }
  Bridge bridge() const { return bridge_; }

  double beta(double z) const;
  double beta_prime(double z) const;

 private:
  double epsilon_;
  Bridge bridge_;
};

struct PenaltyCheck {
  int samples = 0;
  double zero_branch = 0.0;      // max |beta| on z <= 0
  double linear_tail = 0.0;      // max |beta - (z - eps)/eps| on z >= 2 eps
  double monotonicity = 0.0;     // max decrease between consecutive samples
  double convexity = 0.0;        // max negative second difference
  double euler_inequality = 0.0;  // max (beta - z beta')^+
  double derivative_jump = 0.0;  // C^1 mismatch at z = 0 and z = 2 eps

  bool passed(double tol) const {
    return zero_branch <= tol && linear_tail <= tol && monotonicity <= tol && convexity <= tol &&
           euler_inequality <= tol;
  }
};

// Evaluates the family's structural properties on `samples` equispaced points
// of [z_lo, z_hi].
PenaltyCheck certify_penalty(const PenaltyFamily& family, int samples, double z_lo, double z_hi);

}  // namespace gchjb
