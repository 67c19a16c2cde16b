#include "gchjb/penalty.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace gchjb {

PenaltyFamily::PenaltyFamily(double epsilon, Bridge bridge) : epsilon_(epsilon), bridge_(bridge) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw InputError("penalty epsilon must be positive and finite");
  }
}

double PenaltyFamily::beta(double z) const {
  const double s = z / epsilon_;
  if (s <= 0.0) return 0.0;
  if (s >= 2.0) return s - 1.0;
  if (bridge_ == Bridge::kConcaveStub) return s - 0.25 * s * s;
  return 0.25 * s * s;
}

double PenaltyFamily::beta_prime(double z) const {
  const double s = z / epsilon_;
  if (s <= 0.0) return 0.0;
  if (s >= 2.0) return 1.0 / epsilon_;
  if (bridge_ == Bridge::kConcaveStub) return (1.0 - 0.5 * s) / epsilon_;
  return 0.5 * s / epsilon_;
}

PenaltyCheck certify_penalty(const PenaltyFamily& family, int samples, double z_lo, double z_hi) {
  PenaltyCheck out;
  out.samples = samples;
  const double eps = family.epsilon();
  std::vector<double> z(samples), b(samples);
  for (int i = 0; i < samples; ++i) {
    z[i] = z_lo + (z_hi - z_lo) * i / (samples - 1);
    b[i] = family.beta(z[i]);
  }
  for (int i = 0; i < samples; ++i) {
    if (z[i] <= 0.0) out.zero_branch = std::max(out.zero_branch, std::abs(b[i]));
    if (z[i] >= 2.0 * eps) {
      out.linear_tail = std::max(out.linear_tail, std::abs(b[i] - (z[i] - eps) / eps));
    }
    out.euler_inequality =
        std::max(out.euler_inequality, b[i] - z[i] * family.beta_prime(z[i]));
    if (i > 0) out.monotonicity = std::max(out.monotonicity, b[i - 1] - b[i]);
    if (i > 0 && i + 1 < samples) {
      // Second difference scaled to a unit-step slope change.
      const double dz = z[i + 1] - z[i];
      const double curvature = (b[i + 1] - 2.0 * b[i] + b[i - 1]) / dz;
      out.convexity = std::max(out.convexity, -curvature);
    }
  }
  const double d = 1e-7 * eps;
  for (double knot : {0.0, 2.0 * eps}) {
    const double left = (family.beta(knot) - family.beta(knot - d)) / d;
    const double right = (family.beta(knot + d) - family.beta(knot)) / d;
    out.derivative_jump = std::max(out.derivative_jump, std::abs(left - right) * eps);
  }
  return out;
}

}  // namespace gchjb
