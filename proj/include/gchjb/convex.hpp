// Convex gradient-constraint functions H: R^n -> R (n = 1, 2) and the
// regularization ladder H -> H^t -> H^{t,rho} -> H^{t,rho,theta}.
//
// All functions take and return Eigen::Vector2d. One-dimensional functions
// read and write only the first component; the second is kept at zero.
#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gchjb/errors.hpp"

namespace gchjb {

using Vec = Eigen::Vector2d;
using Mat = Eigen::Matrix2d;

// A closed convex set K with 0 in its interior.
class ConvexBody {
 public:
  enum class Kind { kBall, kInterval, kPolytope };

  static ConvexBody ball(int dim, double radius);
  static ConvexBody interval(double lo, double hi);
  // Vertices in any order; the convex hull is taken and must contain 0 in
  // its interior with every listed point a hull vertex.
  static ConvexBody polytope(const std::vector<Vec>& vertices);

  Kind kind() const { return kind_; }
  int dim() const { return dim_; }
  double radius() const { return radius_; }
  double lo() const { return lo_; }
  double hi() const { return hi_; }
  // Counter-clockwise hull vertices (polytopes only).
  const std::vector<Vec>& vertices() const { return vertices_; }

  // Exact geometric membership test.
  bool contains(const Vec& p) const;

  // Signed Euclidean distance to the boundary: negative inside, positive
  // outside. Equals max_{|v|=1} {p.v - support(v)}.
  double signed_distance(const Vec& p) const;

  // Minimal-norm element of the subdifferential of signed_distance at p.
  Vec signed_distance_subgradient(const Vec& p) const;

 private:
  ConvexBody() = default;

  Kind kind_ = Kind::kBall;
  int dim_ = 1;
  double radius_ = 0.0;
  double lo_ = 0.0;
  double hi_ = 0.0;
  std::vector<Vec> vertices_;
  std::vector<Vec> normals_;   // outward unit normal of edge i -> i+1
  std::vector<double> offsets_;  // support value at normals_[i]
};

// Support function l(v) = sup_{p in K} v.p for a unit vector v. Throws
// InputError if |v| differs from 1 by more than 1e-12.
double support_value(const ConvexBody& body, const Vec& v);

namespace detail {
class ConstraintNode;
}

class ConstraintFunction {
 public:
  enum class Kind {
    kNormMinusConstant,
    kQuadraticForm,
    kSupportDerived,
    kMoreauEnvelope,
    kMollified,
    kConvexified,
    kCustom,
  };

  int dim() const;
  Kind kind() const;
  std::string describe() const;

  double value(const Vec& p) const;
  // A member of the subdifferential; the minimal-norm element at kinks.
  Vec subgradient(const Vec& p) const;
  // Second derivative where it exists; a finite surrogate at kinks.
  Mat hessian(const Vec& p) const;

  // theta >= 0 with D^2 H >= theta a.e.
  double curvature_floor() const;
  // sup of |D^2 H| over the ball of the given radius; +inf when unbounded.
  double curvature_bound(double radius) const;

  // Closed-form proximal point argmin_q {H(q) + |p-q|^2/(2t)} when the
  // function has one.
  std::optional<Vec> exact_prox(const Vec& p, double t) const;

  // Weight of the outermost theta|p|^2 term, if this is a convexified function.
  std::optional<double> convexification_weight() const;

  // Inner function of envelope/mollified/convexified kinds; nullptr otherwise.
  const ConstraintFunction* base() const;
  // Ladder parameter: t for envelopes, rho for mollified, theta for convexified.
  double parameter() const;

  explicit ConstraintFunction(std::shared_ptr<const detail::ConstraintNode> node);

 private:
  std::shared_ptr<const detail::ConstraintNode> node_;
};

// H(p) = w|p| - r.
ConstraintFunction norm_minus_constant(int dim, double w, double r);
// H(p) = p^T M p - r2 with M symmetric positive definite (1x1 block in 1D).
ConstraintFunction quadratic_form(int dim, const Mat& m, double r2);
// H(p) = max_{|v|=1} {p.v - l(v)} for the support function l of `body`.
ConstraintFunction support_derived(const ConvexBody& body);
// H^t(p) = inf_q {H(q) + |p-q|^2/(2t)}.
ConstraintFunction moreau_envelope(const ConstraintFunction& base, double t);
// (eta^rho * H^t)(p); `base` must be a Moreau envelope.
ConstraintFunction mollified(const ConstraintFunction& base, double rho);
// theta|p|^2 + H(p), theta in (0, 1).
ConstraintFunction convexified(const ConstraintFunction& base, double theta);
// Caller-supplied convex function, used for test stubs and fault injection.
ConstraintFunction custom_constraint(int dim, std::function<double(const Vec&)> value,
                                     std::function<Vec(const Vec&)> gradient,
                                     double curvature_floor = 0.0, std::string name = "custom");

// theta|p|^2 + (eta^rho * H0^t)(p). Throws InputError unless value(0) < 0.
ConstraintFunction build_regularized(const ConstraintFunction& h0, double t, double rho,
                                     double theta);

double mollified_value(const ConstraintFunction& h, const Vec& p);
double convexified_value(const ConstraintFunction& h, const Vec& p);

// Convolution of `f` with the normalized bump eta^rho, evaluated at p by a
// 16-node Gauss-Legendre rule per axis.
double mollify(const std::function<double(const Vec&)>& f, int dim, double rho, const Vec& p);
Vec mollify_gradient(const std::function<Vec(const Vec&)>& grad, int dim, double rho,
                     const Vec& p);

struct ProxResult {
  Vec point;       // the minimizer q
  double value;    // H(q) + |p-q|^2/(2t)
  int iterations;
  enum class Method { kClosedForm, kNewton, kBisection, kNestedGolden } method;
};

// Inner solve of the Moreau envelope to absolute value tolerance 1e-10.
ProxResult moreau_prox(const ConstraintFunction& base, const Vec& p, double t);

struct EnvelopeSample {
  Vec p;
  Vec z;
};

struct EnvelopeReport {
  int samples = 0;
  double value_at_origin = 0.0;
  bool origin_negative = false;
  // Positive parts of (second difference - bound) for the upper bound |z|^2/t,
  // of (bound - second difference) for the lower bound theta|z|^2/(1+t theta),
  // and of the Q(R,t)-localized bound.
  double max_upper_violation = 0.0;
  double max_lower_violation = 0.0;
  double max_local_violation = 0.0;
  bool lower_checked = false;
  int local_checked = 0;
  double theta = 0.0;

  bool passed(double tol) const {
    return origin_negative && max_upper_violation <= tol && max_lower_violation <= tol &&
           max_local_violation <= tol;
  }
};

EnvelopeReport check_envelope_properties(const ConstraintFunction& h0, double t,
                                         const std::vector<EnvelopeSample>& samples);

// Q(R,t) = 2(R + t max_{|w|<=R} |DH(w)|), the max taken over a grid of B_R.
double envelope_locality_radius(const ConstraintFunction& h0, double radius, double t);

}  // namespace gchjb
