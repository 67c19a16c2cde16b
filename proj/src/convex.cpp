#include "gchjb/convex.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace gchjb {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Vec restrict_to(int dim, const Vec& p) { return dim == 1 ? Vec(p(0), 0.0) : p; }

double norm_in(int dim, const Vec& p) { return dim == 1 ? std::abs(p(0)) : p.norm(); }

// Projection of the origin onto the segment [a, b].
Vec closest_to_origin(const Vec& a, const Vec& b) {
  const Vec d = b - a;
  const double len2 = d.squaredNorm();
  if (len2 == 0.0) return a;
  const double s = std::clamp(-a.dot(d) / len2, 0.0, 1.0);
  return a + s * d;
}

// Minimal-norm point of the convex hull of unit vectors.
Vec min_norm_in_hull(const std::vector<Vec>& pts) {
  if (pts.size() == 1) return pts.front();
  if (pts.size() >= 3) {
    std::vector<double> angles;
    for (const Vec& v : pts) angles.push_back(std::atan2(v(1), v(0)));
    std::sort(angles.begin(), angles.end());
    double max_gap = angles.front() + 2.0 * std::numbers::pi - angles.back();
    for (std::size_t i = 1; i < angles.size(); ++i) {
      max_gap = std::max(max_gap, angles[i] - angles[i - 1]);
    }
    if (max_gap <= std::numbers::pi) return Vec::Zero();
  }
  Vec best = pts.front();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      const Vec c = closest_to_origin(pts[i], pts[j]);
      if (c.norm() < best.norm()) best = c;
    }
  }
  return best;
}

struct GaussLegendre16 {
  std::array<double, 16> nodes{};
  std::array<double, 16> weights{};

  GaussLegendre16() {
    constexpr int n = 16;
    for (int i = 0; i < n; ++i) {
      double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
      double dp = 0.0;
      for (int iter = 0; iter < 100; ++iter) {
        double p0 = 1.0;
        double p1 = x;
        for (int k = 2; k <= n; ++k) {
          const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
          p0 = p1;
          p1 = pk;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        const double dx = p1 / dp;
        x -= dx;
        if (std::abs(dx) < 1e-16) break;
      }
      nodes[i] = x;
      weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
  }
};

const GaussLegendre16& gauss_legendre() {
  static const GaussLegendre16 rule;
  return rule;
}

double bump(double r2) { return r2 < 1.0 ? std::exp(-1.0 / (1.0 - r2)) : 0.0; }

struct MollifierRule {
  std::vector<Vec> offsets;
  std::vector<double> weights;  // normalized to sum to one
};

const MollifierRule& mollifier_rule(int dim) {
  static const auto build = [](int d) {
    const auto& gl = gauss_legendre();
    MollifierRule rule;
    double total = 0.0;
    if (d == 1) {
      // Composite rule: the base is only C^{1,1}, so one 16-node panel stalls near 1e-6.
      constexpr int panels = 16;
      for (int k = 0; k < panels; ++k) {
        const double mid = -1.0 + (2.0 * k + 1.0) / panels;
        for (int i = 0; i < 16; ++i) {
          const double x = mid + gl.nodes[i] / panels;
          const double w = gl.weights[i] * bump(x * x);
          rule.offsets.emplace_back(x, 0.0);
          rule.weights.push_back(w);
          total += w;
        }
      }
    } else {
      for (int i = 0; i < 16; ++i) {
        for (int j = 0; j < 16; ++j) {
          const double r2 = gl.nodes[i] * gl.nodes[i] + gl.nodes[j] * gl.nodes[j];
          if (r2 >= 1.0) continue;
          const double w = gl.weights[i] * gl.weights[j] * bump(r2);
          rule.offsets.emplace_back(gl.nodes[i], gl.nodes[j]);
          rule.weights.push_back(w);
          total += w;
        }
      }
    }
    for (double& w : rule.weights) w /= total;
    return rule;
  };
  static const MollifierRule one = build(1);
  static const MollifierRule two = build(2);
  return dim == 1 ? one : two;
}

Mat finite_difference_hessian(int dim, const std::function<Vec(const Vec&)>& grad, const Vec& p) {
  Mat h = Mat::Zero();
  for (int j = 0; j < dim; ++j) {
    const double step = 1e-5 * std::max(1.0, std::abs(p(j)));
    Vec e = Vec::Zero();
    e(j) = step;
    h.col(j) = (grad(p + e) - grad(p - e)) / (2.0 * step);
  }
  if (dim == 2) h = 0.5 * (h + h.transpose()).eval();
  return h;
}

}  // namespace

// ---------------------------------------------------------------------------
// ConvexBody

ConvexBody ConvexBody::ball(int dim, double radius) {
  if (dim != 1 && dim != 2) throw InputError("ball: dimension must be 1 or 2");
  if (!(radius > 0.0)) throw InputError("ball: radius must be positive");
  ConvexBody b;
  b.kind_ = Kind::kBall;
  b.dim_ = dim;
  b.radius_ = radius;
  return b;
}

ConvexBody ConvexBody::interval(double lo, double hi) {
  if (!(lo < 0.0 && 0.0 < hi)) throw InputError("interval: need lo < 0 < hi");
  ConvexBody b;
  b.kind_ = Kind::kInterval;
  b.dim_ = 1;
  b.lo_ = lo;
  b.hi_ = hi;
  return b;
}

ConvexBody ConvexBody::polytope(const std::vector<Vec>& vertices) {
  if (vertices.size() < 3) throw InputError("polytope: need at least 3 vertices");
  std::vector<Vec> pts = vertices;
  std::sort(pts.begin(), pts.end(), [](const Vec& a, const Vec& b) {
    return a(0) < b(0) || (a(0) == b(0) && a(1) < b(1));
  });
  const auto cross = [](const Vec& o, const Vec& a, const Vec& b) {
    return (a(0) - o(0)) * (b(1) - o(1)) - (a(1) - o(1)) * (b(0) - o(0));
  };
  // Andrew's monotone chain.
  std::vector<Vec> hull(2 * pts.size());
  std::size_t k = 0;
  for (const Vec& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0.0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  if (hull.size() < 3) throw InputError("polytope: vertices are degenerate");
  if (hull.size() != vertices.size()) {
    throw InputError("polytope: every vertex must be a vertex of the convex hull");
  }

  ConvexBody b;
  b.kind_ = Kind::kPolytope;
  b.dim_ = 2;
  b.vertices_ = hull;
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const Vec edge = hull[(i + 1) % hull.size()] - hull[i];
    const Vec normal = Vec(edge(1), -edge(0)).normalized();
    b.normals_.push_back(normal);
    b.offsets_.push_back(normal.dot(hull[i]));
  }
  for (double off : b.offsets_) {
    if (!(off > 1e-12)) throw InputError("polytope: 0 must be an interior point");
  }
  return b;
}

bool ConvexBody::contains(const Vec& p) const {
  switch (kind_) {
    case Kind::kBall:
      return norm_in(dim_, p) <= radius_;
    case Kind::kInterval:
      return lo_ <= p(0) && p(0) <= hi_;
    case Kind::kPolytope:
      for (std::size_t i = 0; i < normals_.size(); ++i) {
        if (normals_[i].dot(p) > offsets_[i]) return false;
      }
      return true;
  }
  return false;
}

double ConvexBody::signed_distance(const Vec& p) const {
  switch (kind_) {
    case Kind::kBall:
      return norm_in(dim_, p) - radius_;
    case Kind::kInterval:
      return std::max(p(0) - hi_, lo_ - p(0));
    case Kind::kPolytope: {
      double inside = -kInf;
      for (std::size_t i = 0; i < normals_.size(); ++i) {
        inside = std::max(inside, normals_[i].dot(p) - offsets_[i]);
      }
      if (inside <= 0.0) return inside;
      double best = kInf;
      for (std::size_t i = 0; i < vertices_.size(); ++i) {
        const Vec a = vertices_[i] - p;
        const Vec b = vertices_[(i + 1) % vertices_.size()] - p;
        best = std::min(best, closest_to_origin(a, b).norm());
      }
      return best;
    }
  }
  return 0.0;
}

Vec ConvexBody::signed_distance_subgradient(const Vec& p) const {
  switch (kind_) {
    case Kind::kBall: {
      if (dim_ == 1) return Vec(p(0) > 0.0 ? 1.0 : (p(0) < 0.0 ? -1.0 : 0.0), 0.0);
      const double n = p.norm();
      return n > 0.0 ? Vec(p / n) : Vec(Vec::Zero());
    }
    case Kind::kInterval: {
      const double mid = 0.5 * (lo_ + hi_);
      return Vec(p(0) > mid ? 1.0 : (p(0) < mid ? -1.0 : 0.0), 0.0);
    }
    case Kind::kPolytope: {
      double inside = -kInf;
      for (std::size_t i = 0; i < normals_.size(); ++i) {
        inside = std::max(inside, normals_[i].dot(p) - offsets_[i]);
      }
      if (inside <= 0.0) {
        const double slack = 1e-12 * (1.0 + p.norm());
        std::vector<Vec> active;
        for (std::size_t i = 0; i < normals_.size(); ++i) {
          if (normals_[i].dot(p) - offsets_[i] >= inside - slack) active.push_back(normals_[i]);
        }
        return min_norm_in_hull(active);
      }
      Vec nearest = vertices_.front();
      double best = kInf;
      for (std::size_t i = 0; i < vertices_.size(); ++i) {
        const Vec a = vertices_[i] - p;
        const Vec b = vertices_[(i + 1) % vertices_.size()] - p;
        const Vec c = closest_to_origin(a, b);
        if (c.norm() < best) {
          best = c.norm();
          nearest = c + p;
        }
      }
      return (p - nearest) / best;
    }
  }
  return Vec::Zero();
}

double support_value(const ConvexBody& body, const Vec& v) {
  const double len = norm_in(body.dim(), v);
  if (std::abs(len - 1.0) > 1e-12) throw InputError("support_value: direction must be a unit vector");
  switch (body.kind()) {
    case ConvexBody::Kind::kBall:
      return body.radius();
    case ConvexBody::Kind::kInterval:
      return v(0) > 0.0 ? body.hi() : -body.lo();
    case ConvexBody::Kind::kPolytope: {
      double best = -kInf;
      for (const Vec& x : body.vertices()) best = std::max(best, v.dot(x));
      return best;
    }
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// Constraint nodes

namespace detail {

class ConstraintNode {
 public:
  explicit ConstraintNode(int dim) : dim_(dim) {}
  virtual ~ConstraintNode() = default;

  int dim() const { return dim_; }
  virtual ConstraintFunction::Kind kind() const = 0;
  virtual std::string describe() const = 0;
  virtual double value(const Vec& p) const = 0;
  virtual Vec subgradient(const Vec& p) const = 0;
  virtual Mat hessian(const Vec& p) const {
    return finite_difference_hessian(dim_, [this](const Vec& q) { return subgradient(q); }, p);
  }
  virtual double curvature_floor() const { return 0.0; }
  virtual double curvature_bound(double) const { return kInf; }
  virtual std::optional<Vec> exact_prox(const Vec&, double) const { return std::nullopt; }
  virtual const ConstraintFunction* base() const { return nullptr; }
  virtual double parameter() const { return 0.0; }
  virtual std::optional<double> convexification_weight() const { return std::nullopt; }

 protected:
  int dim_;
};

namespace {

Vec shrink(int dim, const Vec& p, double amount) {
  const double n = norm_in(dim, p);
  if (n <= amount) return Vec::Zero();
  return restrict_to(dim, p) * (1.0 - amount / n);
}

class NormNode final : public ConstraintNode {
 public:
  NormNode(int dim, double w, double r) : ConstraintNode(dim), w_(w), r_(r) {}
  ConstraintFunction::Kind kind() const override {
    return ConstraintFunction::Kind::kNormMinusConstant;
  }
  std::string describe() const override {
    std::ostringstream os;
    os << w_ << "|p| - " << r_;
    return os.str();
  }
  double value(const Vec& p) const override { return w_ * norm_in(dim_, p) - r_; }
  Vec subgradient(const Vec& p) const override {
    const double n = norm_in(dim_, p);
    if (n == 0.0) return Vec::Zero();
    return w_ * restrict_to(dim_, p) / n;
  }
  Mat hessian(const Vec& p) const override {
    const double n = norm_in(dim_, p);
    if (dim_ == 1 || n == 0.0) return Mat::Zero();
    const Vec u = p / n;
    return w_ * (Mat::Identity() - u * u.transpose()) / n;
  }
  std::optional<Vec> exact_prox(const Vec& p, double t) const override {
    return shrink(dim_, p, w_ * t);
  }

 private:
  double w_;
  double r_;
};

class QuadraticNode final : public ConstraintNode {
 public:
  QuadraticNode(int dim, const Mat& m, double r2) : ConstraintNode(dim), m_(m), r2_(r2) {
    if (dim == 1) {
      m_ = Mat::Zero();
      m_(0, 0) = m(0, 0);
      lo_ = hi_ = m(0, 0);
    } else {
      Eigen::SelfAdjointEigenSolver<Mat> eig(m_);
      lo_ = eig.eigenvalues()(0);
      hi_ = eig.eigenvalues()(1);
    }
  }
  ConstraintFunction::Kind kind() const override { return ConstraintFunction::Kind::kQuadraticForm; }
  std::string describe() const override {
    std::ostringstream os;
    os << "p^T M p - " << r2_;
    return os.str();
  }
  double value(const Vec& p) const override {
    const Vec q = restrict_to(dim_, p);
    return q.dot(m_ * q) - r2_;
  }
  Vec subgradient(const Vec& p) const override { return 2.0 * m_ * restrict_to(dim_, p); }
  Mat hessian(const Vec&) const override { return 2.0 * m_; }
  double curvature_floor() const override { return 2.0 * lo_; }
  double curvature_bound(double) const override { return 2.0 * hi_; }
  std::optional<Vec> exact_prox(const Vec& p, double t) const override {
    Mat a = Mat::Identity() + 2.0 * t * m_;
    return restrict_to(dim_, Vec(a.ldlt().solve(restrict_to(dim_, p))));
  }

 private:
  Mat m_;
  double r2_;
  double lo_ = 0.0;
  double hi_ = 0.0;
};

class SupportNode final : public ConstraintNode {
 public:
  explicit SupportNode(ConvexBody body) : ConstraintNode(body.dim()), body_(std::move(body)) {}
  ConstraintFunction::Kind kind() const override { return ConstraintFunction::Kind::kSupportDerived; }
  std::string describe() const override {
    switch (body_.kind()) {
      case ConvexBody::Kind::kBall: return "support(ball)";
      case ConvexBody::Kind::kInterval: return "support(interval)";
      case ConvexBody::Kind::kPolytope: return "support(polytope)";
    }
    return "support";
  }
  double value(const Vec& p) const override { return body_.signed_distance(p); }
  Vec subgradient(const Vec& p) const override { return body_.signed_distance_subgradient(p); }
  Mat hessian(const Vec& p) const override {
    if (body_.kind() == ConvexBody::Kind::kBall && dim_ == 2) {
      const double n = p.norm();
      if (n == 0.0) return Mat::Zero();
      const Vec u = p / n;
      return (Mat::Identity() - u * u.transpose()) / n;
    }
    if (body_.kind() == ConvexBody::Kind::kPolytope) {
      const double d = body_.signed_distance(p);
      if (d <= 0.0) return Mat::Zero();
      for (const Vec& v : body_.vertices()) {
        if (std::abs((p - v).norm() - d) <= 1e-12 * (1.0 + d)) {
          const Vec u = body_.signed_distance_subgradient(p);
          return (Mat::Identity() - u * u.transpose()) / d;
        }
      }
    }
    return Mat::Zero();
  }
  std::optional<Vec> exact_prox(const Vec& p, double t) const override {
    if (body_.kind() == ConvexBody::Kind::kBall) return shrink(dim_, p, t);
    if (body_.kind() == ConvexBody::Kind::kInterval) {
      const double mid = 0.5 * (body_.lo() + body_.hi());
      if (p(0) - t >= mid) return Vec(p(0) - t, 0.0);
      if (p(0) + t <= mid) return Vec(p(0) + t, 0.0);
      return Vec(mid, 0.0);
    }
    return std::nullopt;
  }

 private:
  ConvexBody body_;
};

class EnvelopeNode final : public ConstraintNode {
 public:
  EnvelopeNode(ConstraintFunction base, double t)
      : ConstraintNode(base.dim()), base_(std::move(base)), t_(t) {}
  ConstraintFunction::Kind kind() const override { return ConstraintFunction::Kind::kMoreauEnvelope; }
  std::string describe() const override {
    std::ostringstream os;
    os << "envelope(" << base_.describe() << ", t=" << t_ << ")";
    return os.str();
  }
  double value(const Vec& p) const override { return moreau_prox(base_, p, t_).value; }
  Vec subgradient(const Vec& p) const override {
    const Vec q = moreau_prox(base_, p, t_).point;
    return restrict_to(dim_, Vec((p - q) / t_));
  }
  double curvature_floor() const override {
    const double theta = base_.curvature_floor();
    return theta / (1.0 + t_ * theta);
  }
  double curvature_bound(double radius) const override {
    const double local = base_.curvature_bound(envelope_locality_radius(base_, radius, t_));
    return std::min(1.0 / t_, local);
  }
  // The proximal map of H^t with step s is p + s/(s+t) (prox_{(s+t)H}(p) - p).
  std::optional<Vec> exact_prox(const Vec& p, double s) const override {
    const Vec r = moreau_prox(base_, p, s + t_).point;
    return restrict_to(dim_, Vec(p + (s / (s + t_)) * (r - p)));
  }
  const ConstraintFunction* base() const override { return &base_; }
  double parameter() const override { return t_; }

 private:
  ConstraintFunction base_;
  double t_;
};

class MollifiedNode final : public ConstraintNode {
 public:
  MollifiedNode(ConstraintFunction base, double rho)
      : ConstraintNode(base.dim()), base_(std::move(base)), rho_(rho) {}
  ConstraintFunction::Kind kind() const override { return ConstraintFunction::Kind::kMollified; }
  std::string describe() const override {
    std::ostringstream os;
    os << "mollified(" << base_.describe() << ", rho=" << rho_ << ")";
    return os.str();
  }
  double value(const Vec& p) const override {
    return mollify([this](const Vec& q) { return base_.value(q); }, dim_, rho_, p);
  }
  Vec subgradient(const Vec& p) const override {
    return mollify_gradient([this](const Vec& q) { return base_.subgradient(q); }, dim_, rho_, p);
  }
  double curvature_floor() const override { return base_.curvature_floor(); }
  double curvature_bound(double radius) const override {
    return base_.curvature_bound(radius + rho_);
  }
  const ConstraintFunction* base() const override { return &base_; }
  double parameter() const override { return rho_; }

 private:
  ConstraintFunction base_;
  double rho_;
};

class ConvexifiedNode final : public ConstraintNode {
 public:
  ConvexifiedNode(ConstraintFunction base, double theta)
      : ConstraintNode(base.dim()), base_(std::move(base)), theta_(theta) {}
  ConstraintFunction::Kind kind() const override { return ConstraintFunction::Kind::kConvexified; }
  std::string describe() const override {
    std::ostringstream os;
    os << theta_ << "|p|^2 + " << base_.describe();
    return os.str();
  }
  double value(const Vec& p) const override {
    const Vec q = restrict_to(dim_, p);
    return theta_ * q.squaredNorm() + base_.value(q);
  }
  Vec subgradient(const Vec& p) const override {
    const Vec q = restrict_to(dim_, p);
    return 2.0 * theta_ * q + base_.subgradient(q);
  }
  Mat hessian(const Vec& p) const override {
    Mat h = base_.hessian(p);
    h(0, 0) += 2.0 * theta_;
    if (dim_ == 2) h(1, 1) += 2.0 * theta_;
    return h;
  }
  double curvature_floor() const override { return 2.0 * theta_ + base_.curvature_floor(); }
  double curvature_bound(double radius) const override {
    return 2.0 * theta_ + base_.curvature_bound(radius);
  }
  const ConstraintFunction* base() const override { return &base_; }
  double parameter() const override { return theta_; }
  std::optional<double> convexification_weight() const override { return theta_; }

 private:
  ConstraintFunction base_;
  double theta_;
};

class CustomNode final : public ConstraintNode {
 public:
  CustomNode(int dim, std::function<double(const Vec&)> value, std::function<Vec(const Vec&)> grad,
             double floor, std::string name)
      : ConstraintNode(dim),
        value_(std::move(value)),
        grad_(std::move(grad)),
        floor_(floor),
        name_(std::move(name)) {}
  ConstraintFunction::Kind kind() const override { return ConstraintFunction::Kind::kCustom; }
  std::string describe() const override { return name_; }
  double value(const Vec& p) const override { return value_(restrict_to(dim_, p)); }
  Vec subgradient(const Vec& p) const override {
    return restrict_to(dim_, grad_(restrict_to(dim_, p)));
  }
  double curvature_floor() const override { return floor_; }

 private:
  std::function<double(const Vec&)> value_;
  std::function<Vec(const Vec&)> grad_;
  double floor_;
  std::string name_;
};

}  // namespace
}  // namespace detail

// ---------------------------------------------------------------------------
// ConstraintFunction

ConstraintFunction::ConstraintFunction(std::shared_ptr<const detail::ConstraintNode> node)
    : node_(std::move(node)) {}

int ConstraintFunction::dim() const { return node_->dim(); }
ConstraintFunction::Kind ConstraintFunction::kind() const { return node_->kind(); }
std::string ConstraintFunction::describe() const { return node_->describe(); }
double ConstraintFunction::value(const Vec& p) const { return node_->value(p); }
Vec ConstraintFunction::subgradient(const Vec& p) const { return node_->subgradient(p); }
Mat ConstraintFunction::hessian(const Vec& p) const { return node_->hessian(p); }
double ConstraintFunction::curvature_floor() const { return node_->curvature_floor(); }
double ConstraintFunction::curvature_bound(double radius) const {
  return node_->curvature_bound(radius);
}
std::optional<Vec> ConstraintFunction::exact_prox(const Vec& p, double t) const {
  return node_->exact_prox(p, t);
}
std::optional<double> ConstraintFunction::convexification_weight() const {
  return node_->convexification_weight();
}
const ConstraintFunction* ConstraintFunction::base() const { return node_->base(); }
double ConstraintFunction::parameter() const { return node_->parameter(); }

namespace {

void check_dim(int dim) {
  if (dim != 1 && dim != 2) throw InputError("constraint dimension must be 1 or 2");
}

ConstraintFunction require_negative_origin(ConstraintFunction h) {
  const double v0 = h.value(Vec::Zero());
  if (!(v0 < 0.0)) {
    throw InputError("constraint must satisfy H(0) < 0, got H(0) = " + std::to_string(v0));
  }
  return h;
}

}  // namespace

ConstraintFunction norm_minus_constant(int dim, double w, double r) {
  check_dim(dim);
  if (!(w > 0.0)) throw InputError("norm constraint: weight must be positive");
  if (!(r > 0.0)) throw InputError("norm constraint: radius must be positive");
  return ConstraintFunction(std::make_shared<detail::NormNode>(dim, w, r));
}

ConstraintFunction quadratic_form(int dim, const Mat& m, double r2) {
  check_dim(dim);
  if (!(r2 > 0.0)) throw InputError("quadratic constraint: level must be positive");
  if (dim == 1) {
    if (!(m(0, 0) > 0.0)) throw InputError("quadratic constraint: M must be positive definite");
  } else {
    if (std::abs(m(0, 1) - m(1, 0)) > 1e-12 * (1.0 + m.norm())) {
      throw InputError("quadratic constraint: M must be symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Mat> eig(m);
    if (!(eig.eigenvalues()(0) > 0.0)) {
      throw InputError("quadratic constraint: M must be positive definite");
    }
  }
  return ConstraintFunction(std::make_shared<detail::QuadraticNode>(dim, m, r2));
}

ConstraintFunction support_derived(const ConvexBody& body) {
  return ConstraintFunction(std::make_shared<detail::SupportNode>(body));
}

ConstraintFunction moreau_envelope(const ConstraintFunction& base, double t) {
  if (!(t > 0.0)) throw InputError("envelope: t must be positive");
  return ConstraintFunction(std::make_shared<detail::EnvelopeNode>(base, t));
}

ConstraintFunction mollified(const ConstraintFunction& base, double rho) {
  if (base.kind() != ConstraintFunction::Kind::kMoreauEnvelope) {
    throw InputError("mollification applies to a Moreau envelope");
  }
  if (!(rho > 0.0)) throw InputError("mollification radius must be positive");
  return ConstraintFunction(std::make_shared<detail::MollifiedNode>(base, rho));
}

ConstraintFunction convexified(const ConstraintFunction& base, double theta) {
  if (!(theta > 0.0 && theta < 1.0)) throw InputError("convexification weight must lie in (0, 1)");
  return ConstraintFunction(std::make_shared<detail::ConvexifiedNode>(base, theta));
}

ConstraintFunction custom_constraint(int dim, std::function<double(const Vec&)> value,
                                     std::function<Vec(const Vec&)> gradient,
                                     double curvature_floor, std::string name) {
  check_dim(dim);
  return ConstraintFunction(std::make_shared<detail::CustomNode>(
      dim, std::move(value), std::move(gradient), curvature_floor, std::move(name)));
}

ConstraintFunction build_regularized(const ConstraintFunction& h0, double t, double rho,
                                     double theta) {
  for (double v : {t, rho, theta}) {
    if (!(v > 0.0 && v < 1.0)) throw InputError("regularization parameters must lie in (0, 1)");
  }
  require_negative_origin(h0);
  const auto smoothed = mollified(moreau_envelope(h0, t), rho);
  const double v0 = smoothed.value(Vec::Zero());
  if (!(v0 < 0.0)) {
    throw InputError("regularization destroyed H(0) < 0 (mollified value " + std::to_string(v0) +
                     "); decrease rho");
  }
  return convexified(smoothed, theta);
}

double mollified_value(const ConstraintFunction& h, const Vec& p) {
  if (h.kind() != ConstraintFunction::Kind::kMollified) {
    throw InputError("mollified_value: not a mollified constraint");
  }
  return h.value(p);
}

double convexified_value(const ConstraintFunction& h, const Vec& p) {
  if (h.kind() != ConstraintFunction::Kind::kConvexified) {
    throw InputError("convexified_value: not a convexified constraint");
  }
  return h.value(p);
}

double mollify(const std::function<double(const Vec&)>& f, int dim, double rho, const Vec& p) {
  const auto& rule = mollifier_rule(dim);
  double acc = 0.0;
  for (std::size_t i = 0; i < rule.weights.size(); ++i) {
    acc += rule.weights[i] * f(restrict_to(dim, Vec(p - rho * rule.offsets[i])));
  }
  return acc;
}

Vec mollify_gradient(const std::function<Vec(const Vec&)>& grad, int dim, double rho,
                     const Vec& p) {
  const auto& rule = mollifier_rule(dim);
  Vec acc = Vec::Zero();
  for (std::size_t i = 0; i < rule.weights.size(); ++i) {
    acc += rule.weights[i] * grad(restrict_to(dim, Vec(p - rho * rule.offsets[i])));
  }
  return restrict_to(dim, acc);
}

// ---------------------------------------------------------------------------
// Proximal solve

namespace {

constexpr int kProxIterationCap = 200;

double golden_min(const std::function<double(double)>& f, double lo, double hi, double* arg) {
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo;
  double b = hi;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = f(c);
  double fd = f(d);
  for (int it = 0; it < kProxIterationCap && b - a > 0.0; ++it) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = f(d);
    }
    if (!(b - a > 4.0 * std::numeric_limits<double>::epsilon() * (std::abs(a) + std::abs(b)))) break;
  }
  double best_x = fc <= fd ? c : d;
  double best = std::min(fc, fd);
  for (double x : {a, b}) {
    const double fx = f(x);
    if (fx < best) {
      best = fx;
      best_x = x;
    }
  }
  *arg = best_x;
  return best;
}

}  // namespace

ProxResult moreau_prox(const ConstraintFunction& base, const Vec& p_in, double t) {
  const int dim = base.dim();
  const Vec p = restrict_to(dim, p_in);
  const auto objective = [&](const Vec& q) {
    return base.value(q) + (p - q).squaredNorm() / (2.0 * t);
  };

  if (auto q = base.exact_prox(p, t)) {
    return {*q, objective(*q), 0, ProxResult::Method::kClosedForm};
  }

  // Damped Newton on the 1/t-strongly convex objective. For any subgradient g
  // of the objective at q, objective(q) - min <= t|g|^2/2.
  constexpr double kCertificate = 1e-13;
  Vec q = p;
  double fq = objective(q);
  int it = 0;
  bool certified = false;
  for (; it < kProxIterationCap; ++it) {
    const Vec g = restrict_to(dim, Vec(base.subgradient(q) + (q - p) / t));
    if (0.5 * t * g.squaredNorm() <= kCertificate) {
      certified = true;
      break;
    }
    Mat k = base.hessian(q) + Mat::Identity() / t;
    if (dim == 1) {
      k(0, 1) = k(1, 0) = 0.0;
      k(1, 1) = 1.0;
    }
    const Vec step = restrict_to(dim, Vec(-k.ldlt().solve(g)));
    double s = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 60; ++ls, s *= 0.5) {
      const Vec trial = q + s * step;
      const double ft = objective(trial);
      if (ft <= fq + 1e-4 * s * g.dot(step)) {
        q = trial;
        fq = ft;
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }
  if (certified) return {q, fq, it, ProxResult::Method::kNewton};

  // The minimizer lies within t|g(p)| of p for any subgradient g(p) of H.
  const double reach = t * base.subgradient(p).norm() * (1.0 + 1e-9) + 1e-300;
  if (dim == 1) {
    double lo = p(0) - reach;
    double hi = p(0) + reach;
    const auto slope = [&](double x) { return base.subgradient(Vec(x, 0.0))(0) + (x - p(0)) / t; };
    int n = 0;
    // Stop at a relative width of a few ulps of the bracket scale; a kink at 0 would
    // otherwise drag the bisection through the subnormals.
    const double scale = std::max({std::abs(lo), std::abs(hi), t});
    for (; n < kProxIterationCap && hi - lo > 4.0 * std::numeric_limits<double>::epsilon() * scale; ++n) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      const double s = slope(mid);
      if (s > 0.0) {
        hi = mid;
      } else if (s < 0.0) {
        lo = mid;
      } else {
        lo = hi = mid;
      }
    }
    if (n >= kProxIterationCap) throw SolveError("envelope inner solve did not converge");
    Vec best(lo, 0.0);
    double fbest = objective(best);
    for (double x : {hi, 0.5 * (lo + hi)}) {
      const double fx = objective(Vec(x, 0.0));
      if (fx < fbest) {
        fbest = fx;
        best = Vec(x, 0.0);
      }
    }
    if (fq < fbest) {
      fbest = fq;
      best = q;
    }
    return {best, fbest, it + n, ProxResult::Method::kBisection};
  }

  // Nested golden-section search over the box of half-width `reach`.
  Vec best = q;
  double fbest = fq;
  double q1 = p(0);
  const auto inner = [&](double x1) {
    double x2 = p(1);
    const double v =
        golden_min([&](double y) { return objective(Vec(x1, y)); }, p(1) - reach, p(1) + reach, &x2);
    if (v < fbest) {
      fbest = v;
      best = Vec(x1, x2);
    }
    return v;
  };
  golden_min(inner, p(0) - reach, p(0) + reach, &q1);
  return {best, fbest, it + 2 * kProxIterationCap, ProxResult::Method::kNestedGolden};
}

// ---------------------------------------------------------------------------
// Envelope property checks

double envelope_locality_radius(const ConstraintFunction& h0, double radius, double t) {
  double g = h0.subgradient(Vec::Zero()).norm();
  if (radius > 0.0) {
    if (h0.dim() == 1) {
      constexpr int n = 200;
      for (int i = 0; i <= n; ++i) {
        const double w = -radius + 2.0 * radius * i / n;
        g = std::max(g, h0.subgradient(Vec(w, 0.0)).norm());
      }
    } else {
      constexpr int n = 40;
      for (int i = 0; i <= n; ++i) {
        for (int j = 0; j <= n; ++j) {
          const Vec w(-radius + 2.0 * radius * i / n, -radius + 2.0 * radius * j / n);
          if (w.norm() <= radius) g = std::max(g, h0.subgradient(w).norm());
        }
      }
      for (int k = 0; k < 64; ++k) {
        const double a = 2.0 * std::numbers::pi * k / 64;
        g = std::max(g, h0.subgradient(Vec(radius * std::cos(a), radius * std::sin(a))).norm());
      }
    }
  }
  return 2.0 * (radius + t * g);
}

EnvelopeReport check_envelope_properties(const ConstraintFunction& h0, double t,
                                         const std::vector<EnvelopeSample>& samples) {
  const auto env = moreau_envelope(h0, t);
  EnvelopeReport report;
  report.samples = static_cast<int>(samples.size());
  report.value_at_origin = env.value(Vec::Zero());
  report.origin_negative = report.value_at_origin < 0.0;
  report.theta = h0.curvature_floor();
  report.lower_checked = report.theta > 0.0;

  for (const auto& s : samples) {
    const Vec p = restrict_to(h0.dim(), s.p);
    const Vec z = restrict_to(h0.dim(), s.z);
    const double z2 = z.squaredNorm();
    const double d2 = env.value(p + z) - 2.0 * env.value(p) + env.value(p - z);

    report.max_upper_violation = std::max(report.max_upper_violation, d2 - z2 / t);
    if (report.lower_checked) {
      const double lower = report.theta * z2 / (1.0 + t * report.theta);
      report.max_lower_violation = std::max(report.max_lower_violation, lower - d2);
    }
    const double q = envelope_locality_radius(h0, p.norm(), t);
    const double curvature = h0.curvature_bound(q + std::sqrt(z2));
    if (std::isfinite(curvature)) {
      ++report.local_checked;
      report.max_local_violation = std::max(report.max_local_violation, d2 - curvature * z2);
    }
  }
  return report;
}

}  // namespace gchjb
