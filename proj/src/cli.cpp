#include "gchjb/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "gchjb/convex.hpp"
#include "gchjb/diagnostics.hpp"
#include "gchjb/io.hpp"
#include "gchjb/mc.hpp"
#include "gchjb/operator.hpp"
#include "gchjb/penalty.hpp"
#include "gchjb/solver.hpp"

namespace gchjb {

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

// Thrown when a verify check fails; carries no message beyond the summary.
struct PropertyFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Context {
  json config;
  fs::path out_dir;
  bool quiet = false;
  std::ostream* out = nullptr;

  void say(const std::string& line) const {
    if (!quiet) *out << line << '\n';
  }
};

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  return j.at(key).get<T>();
}

const json& require(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw InputError(std::string("config: missing \"") + key + "\"");
  return j.at(key);
}

std::vector<std::string> string_list(const json& j, const char* key, int dim) {
  const json& v = require(j, key);
  std::vector<std::string> out;
  if (v.is_string()) {
    out.assign(static_cast<std::size_t>(dim), v.get<std::string>());
  } else if (v.is_number()) {
    out.assign(static_cast<std::size_t>(dim), format_double(v.get<double>()));
  } else {
    for (const auto& e : v) out.push_back(e.is_number() ? format_double(e.get<double>()) : e.get<std::string>());
  }
  return out;
}

std::string expression_field(const json& j, const char* key, const std::string& fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  return v.is_number() ? format_double(v.get<double>()) : v.get<std::string>();
}

EllipticProblem parse_problem(const json& cfg) {
  const json& p = require(cfg, "problem");
  const int dim = get_or(p, "dim", 1);
  if (dim != 1 && dim != 2) throw InputError("config: problem.dim must be 1 or 2");
  require(p, "f");
  std::array<double, 2> lo{-1.0, -1.0}, hi{1.0, 1.0};
  if (p.contains("box")) {
    const auto l = p.at("box").at("lo").get<std::vector<double>>();
    const auto h = p.at("box").at("hi").get<std::vector<double>>();
    if (static_cast<int>(l.size()) != dim || static_cast<int>(h.size()) != dim) {
      throw InputError("config: box bounds must have one entry per dimension");
    }
    for (int k = 0; k < dim; ++k) {
      lo[static_cast<std::size_t>(k)] = l[static_cast<std::size_t>(k)];
      hi[static_cast<std::size_t>(k)] = h[static_cast<std::size_t>(k)];
    }
  }
  auto problem = EllipticProblem::from_sources(
      dim, lo, hi, string_list(p, "a", dim),
      p.contains("b") ? string_list(p, "b", dim) : std::vector<std::string>(static_cast<std::size_t>(dim), "0"),
      expression_field(p, "c", "1"), expression_field(p, "f", "0"),
      expression_field(p, "g", "0"));
  const std::string drift = get_or<std::string>(p, "drift", "upwind");
  if (drift == "central") {
    problem.drift = DriftScheme::kCentral;
  } else if (drift != "upwind") {
    throw InputError("config: drift must be \"upwind\" or \"central\"");
  }
  return problem;
}

ConvexBody parse_body(const json& b, int dim) {
  const std::string type = require(b, "type").get<std::string>();
  if (type == "interval") return ConvexBody::interval(require(b, "lo").get<double>(), require(b, "hi").get<double>());
  if (type == "ball") return ConvexBody::ball(dim, require(b, "radius").get<double>());
  if (type == "polytope") {
    std::vector<Vec> vertices;
    for (const auto& v : require(b, "vertices")) {
      const auto c = v.get<std::vector<double>>();
      if (c.size() != 2) throw InputError("config: polytope vertices need two coordinates");
      vertices.emplace_back(c[0], c[1]);
    }
    return ConvexBody::polytope(vertices);
  }
  throw InputError("config: unknown body type \"" + type + "\"");
}

ConstraintFunction parse_constraint(const json& c, int dim) {
  const std::string kind = require(c, "kind").get<std::string>();
  if (kind == "norm") return norm_minus_constant(dim, get_or(c, "w", 1.0), get_or(c, "r", 1.0));
  if (kind == "quadratic") {
    Mat m = Mat::Identity();
    if (c.contains("M")) {
      const json& mj = c.at("M");
      if (mj.is_number()) {
        m *= mj.get<double>();
      } else {
        const auto rows = mj.get<std::vector<std::vector<double>>>();
        if (static_cast<int>(rows.size()) != dim) throw InputError("config: matrix size must match dim");
        for (int r = 0; r < dim; ++r) {
          if (static_cast<int>(rows[static_cast<std::size_t>(r)].size()) != dim) {
            throw InputError("config: matrix size must match dim");
          }
          for (int k = 0; k < dim; ++k) m(r, k) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(k)];
        }
      }
    }
    return quadratic_form(dim, m, get_or(c, "r2", 1.0));
  }
  if (kind == "support") return support_derived(parse_body(require(c, "body"), dim));
  if (kind == "regularized") {
    return build_regularized(parse_constraint(require(c, "base"), dim), get_or(c, "t", 0.1),
                             get_or(c, "rho", 0.01), get_or(c, "theta", 0.01));
  }
  throw InputError("config: unknown constraint kind \"" + kind + "\"");
}

// The unregularized function inside a regularized constraint config.
ConstraintFunction parse_base_constraint(const json& c, int dim) {
  if (get_or<std::string>(c, "kind", "") == "regularized") return parse_base_constraint(require(c, "base"), dim);
  return parse_constraint(c, dim);
}

std::array<int, 2> parse_shape(const json& s, int dim) {
  const auto v = s.get<std::vector<int>>();
  if (static_cast<int>(v.size()) != dim) throw InputError("config: grid shape must have one entry per dimension");
  return {v[0], dim == 2 ? v[1] : 1};
}

ContinuationSchedule parse_schedule(const json& cfg) {
  ContinuationSchedule s = ContinuationSchedule::standard();
  if (cfg.contains("schedule")) {
    const json& j = cfg.at("schedule");
    if (j.contains("eps")) {
      s.eps = j.at("eps").get<std::vector<double>>();
    } else {
      s = ContinuationSchedule::down_to(get_or(j, "start", 0.5), require(j, "final").get<double>(),
                                        get_or(j, "factor", 0.5));
    }
  }
  if (cfg.contains("newton")) {
    const json& n = cfg.at("newton");
    s.newton.max_iter = get_or(n, "max_iter", s.newton.max_iter);
    s.newton.abs_tol = get_or(n, "abs_tol", s.newton.abs_tol);
    s.newton.armijo = get_or(n, "armijo", s.newton.armijo);
    s.newton.min_step = get_or(n, "min_step", s.newton.min_step);
  }
  s.validate();
  return s;
}

ConstrainedOptions parse_options(const json& cfg) {
  ConstrainedOptions o;
  if (cfg.contains("diagnostics")) {
    const json& d = cfg.at("diagnostics");
    o.margin_cells = get_or(d, "margin_cells", o.margin_cells);
    o.activity_tol = get_or(d, "activity_tol", o.activity_tol);
  }
  if (o.margin_cells < 1) throw InputError("config: diagnostics.margin_cells must be positive");
  return o;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

json stage_json(const StageRecord& s) {
  return {{"eps", s.eps},
          {"iterations", s.iterations},
          {"residual", s.residual},
          {"tolerance", s.tolerance},
          {"max_penalty", s.max_penalty},
          {"max_grad", s.max_grad},
          {"max_second_diff", s.max_second_diff},
          {"max_constraint", s.max_constraint},
          {"sandwich_violation", s.sandwich_violation},
          {"below_theta", s.below_theta}};
}

struct Solved {
  EllipticProblem problem;
  std::optional<ConstraintFunction> constraint;
  std::array<int, 2> shape{};
  DiscreteOperator op;
  SolveReport report;
};

Solved solve_from_config(const Context& ctx) {
  const json& cfg = ctx.config;
  Solved s{parse_problem(cfg), std::nullopt, {}, {}, {}};
  s.shape = parse_shape(require(require(cfg, "grid"), "shape"), s.problem.dim);
  validate(s.problem, s.shape);
  const ContinuationSchedule schedule = parse_schedule(cfg);
  if (cfg.contains("constraint")) s.constraint = parse_constraint(cfg.at("constraint"), s.problem.dim);
  s.op = assemble(s.problem, s.shape);
  if (s.constraint) {
    s.report = solve_constrained(s.op, *s.constraint, schedule, parse_options(cfg));
  } else {
    s.report.u = solve_unconstrained(s.op);
    s.report.u_bar = s.report.u;
  }
  return s;
}

int cmd_solve(const Context& ctx) {
  const auto t0 = std::chrono::steady_clock::now();
  Solved s = solve_from_config(ctx);
  const double runtime = seconds_since(t0);
  const int margin = parse_options(ctx.config).margin_cells;

  write_solution_csv(ctx.out_dir / "solution.csv", s.report.u);
  json report = {{"dim", s.problem.dim},
                 {"shape", std::vector<int>(s.shape.begin(), s.shape.begin() + s.problem.dim)},
                 {"h", s.op.grid.h[0]},
                 {"floors", {{"gamma", s.op.floors.gamma}, {"delta", s.op.floors.delta}}},
                 {"runtime_seconds", runtime}};
  const SandwichResult sw = sandwich_check(s.report.u, s.report.u_bar);
  report["sandwich"] = {{"pass", sw.pass}, {"max_violation", sw.max_violation}, {"strictly_below", sw.strictly_below}};
  report["regularity"] = {{"margin_cells", margin},
                          {"sup_grad", gradient_sup(s.report.u, margin)},
                          {"sup_second_diff", second_difference_sup(s.report.u, margin)}};
  const HolderFit fit = holder_fit(s.report.u, margin);
  report["regularity"]["holder_alpha"] = fit.alpha;
  report["regularity"]["holder_r_squared"] = fit.r_squared;

  if (s.constraint) {
    report["constraint"] = s.constraint->describe();
    json stages = json::array();
    for (const auto& st : s.report.stages) stages.push_back(stage_json(st));
    report["stages"] = stages;
    const auto& c = s.report.complementarity;
    report["complementarity"] = {{"residual", c.residual},
                                 {"max_constraint", c.max_constraint},
                                 {"max_pde", c.max_pde},
                                 {"max_min_slack", c.max_min_slack}};
    if (s.report.theta) report["theta"] = *s.report.theta;
    const FreeBoundaryMask mask = free_boundary(s.op, s.report.u, *s.constraint, s.report.activity_tol);
    report["free_boundary"] = {{"activity_tol", mask.tol},
                               {"pde_active", mask.count(kPdeActive)},
                               {"constraint_active", mask.count(kConstraintActive)},
                               {"both_near", mask.count(kBothNear)},
                               {"interface_points", mask.interface_points.size()},
                               {"symmetry_defect_cells", mask_symmetry_defect(mask)}};
    write_free_boundary_csv(ctx.out_dir / "free_boundary.csv", mask);
    write_mask_csv(ctx.out_dir / "mask.csv", mask);
  }
  write_json(ctx.out_dir / "report.json", report);
  ctx.say("solve: " + std::to_string(s.report.stages.size()) + " stages in " + format_double(runtime) + " s");
  if (s.constraint) ctx.say("complementarity residual " + format_double(s.report.complementarity.residual));
  return kExitOk;
}

// Random (p, z) pairs in [-2, 2]^d x [-0.5, 0.5]^d.
std::vector<EnvelopeSample> envelope_samples(int dim, int count, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> up(-2.0, 2.0), uz(-0.5, 0.5);
  std::vector<EnvelopeSample> out(static_cast<std::size_t>(count));
  for (auto& s : out) {
    s.p = Vec(up(rng), dim == 2 ? up(rng) : 0.0);
    s.z = Vec(uz(rng), dim == 2 ? uz(rng) : 0.0);
  }
  return out;
}

int cmd_verify(const Context& ctx) {
  const json& cfg = ctx.config;
  const json v = cfg.contains("verify") ? cfg.at("verify") : json::object();
  const std::string fault = get_or<std::string>(v, "fault_injection", "");
  if (!fault.empty() && fault != "concave_penalty") throw InputError("config: unknown fault_injection \"" + fault + "\"");
  const auto bridge = fault == "concave_penalty" ? PenaltyFamily::Bridge::kConcaveStub : PenaltyFamily::Bridge::kQuadratic;
  const double tol = get_or(v, "tolerance", 1e-9);

  // Parse everything before running anything so config errors exit 1.
  Solved s{parse_problem(cfg), std::nullopt, {}, {}, {}};
  s.shape = parse_shape(require(require(cfg, "grid"), "shape"), s.problem.dim);
  validate(s.problem, s.shape);
  const ContinuationSchedule schedule = parse_schedule(cfg);
  s.constraint = parse_constraint(require(cfg, "constraint"), s.problem.dim);
  const ConstraintFunction base = parse_base_constraint(cfg.at("constraint"), s.problem.dim);

  json checks = json::array();
  bool all = true;
  const auto record = [&](json entry) {
    all = all && entry.at("pass").get<bool>();
    ctx.say(entry.at("name").get<std::string>() + ": " + (entry.at("pass").get<bool>() ? "pass" : "FAIL"));
    checks.push_back(std::move(entry));
  };

  for (double eps : get_or(v, "penalty_eps", std::vector<double>{0.5, 0.1, 0.01})) {
    const PenaltyCheck pc = certify_penalty(PenaltyFamily(eps, bridge), get_or(v, "penalty_samples", 10000), -1.0, 5.0 * eps);
    record({{"name", "penalty eps=" + format_double(eps)},
            {"pass", pc.passed(tol) && pc.derivative_jump <= 1e-6},
            {"zero_branch", pc.zero_branch},
            {"linear_tail", pc.linear_tail},
            {"monotonicity", pc.monotonicity},
            {"convexity", pc.convexity},
            {"euler_inequality", pc.euler_inequality},
            {"derivative_jump", pc.derivative_jump}});
  }

  std::mt19937_64 rng(get_or<std::uint64_t>(v, "seed", 7));
  const int samples = get_or(v, "envelope_samples", 1000);
  for (double t : get_or(v, "envelope_t", std::vector<double>{0.05, 0.1, 0.5})) {
    const EnvelopeReport er = check_envelope_properties(base, t, envelope_samples(s.problem.dim, samples, rng));
    record({{"name", "envelope t=" + format_double(t)},
            {"pass", er.passed(1e-8)},
            {"value_at_origin", er.value_at_origin},
            {"max_upper_violation", er.max_upper_violation},
            {"max_lower_violation", er.max_lower_violation},
            {"lower_checked", er.lower_checked},
            {"max_local_violation", er.max_local_violation},
            {"local_checked", er.local_checked}});
  }

  s.op = assemble(s.problem, s.shape);
  s.report = solve_constrained(s.op, *s.constraint, schedule, parse_options(cfg));
  const SandwichResult sw = sandwich_check(s.report.u, s.report.u_bar);
  record({{"name", "sandwich"}, {"pass", sw.pass}, {"max_violation", sw.max_violation}});

  const auto& c = s.report.complementarity;
  const double con_tol = get_or(v, "constraint_tol", 1e-2);
  const double pde_tol = get_or(v, "pde_tol", 1e-2);
  const double slack_tol = get_or(v, "slack_tol", 5e-2);
  record({{"name", "complementarity"},
          {"pass", c.max_constraint <= con_tol && c.max_pde <= pde_tol && c.max_min_slack <= slack_tol},
          {"max_constraint", c.max_constraint},
          {"max_pde", c.max_pde},
          {"max_min_slack", c.max_min_slack}});

  std::vector<OrderedPair> pairs;
  if (v.contains("comparison_pairs")) {
    for (const auto& pj : v.at("comparison_pairs")) {
      pairs.push_back({expression_field(pj, "f_low", ""), expression_field(pj, "f_high", ""),
                       expression_field(pj, "g_low", ""), expression_field(pj, "g_high", "")});
    }
  } else {
    const std::string f = s.problem.f.print();
    const std::string g = s.problem.g.print();
    pairs.push_back({"", f + " + 0.5", "", ""});
    pairs.push_back({"", "", "", g + " + 0.1"});
  }
  const ComparisonReport cr = comparison_test(s.problem, *s.constraint, schedule, s.shape, pairs);
  for (std::size_t k = 0; k < cr.rows.size(); ++k) {
    record({{"name", "comparison " + std::to_string(k)}, {"pass", cr.rows[k].pass}, {"max_violation", cr.rows[k].max_violation}});
  }

  write_json(ctx.out_dir / "verify.json", {{"passed", all}, {"checks", checks}});
  if (!all) throw PropertyFailure("verify: property check failed");
  return kExitOk;
}

int cmd_study(const Context& ctx) {
  const json& cfg = ctx.config;
  const json& st = require(cfg, "study");
  const EllipticProblem problem = parse_problem(cfg);
  const ContinuationSchedule schedule = parse_schedule(cfg);
  const ConstraintFunction h = parse_constraint(require(cfg, "constraint"), problem.dim);
  std::vector<std::array<int, 2>> shapes;
  for (const auto& sj : require(st, "shapes")) shapes.push_back(parse_shape(sj, problem.dim));
  for (const auto& sh : shapes) validate(problem, sh);
  std::optional<Expression> exact;
  if (st.contains("exact")) exact = Expression::parse(st.at("exact").get<std::string>());

  const StudyResult r = convergence_study(problem, h, schedule, shapes, exact);
  {
    std::ofstream out(ctx.out_dir / "rates.csv");
    if (!out) throw InputError("cannot write rates.csv");
    out << "kind,level,h,eps,value_error,gradient_error\n";
    for (const auto& row : r.rows) {
      out << "error," << row.level << ',' << format_double(row.h) << ',' << format_double(row.eps) << ','
          << format_double(row.value_error) << ',' << format_double(row.gradient_error) << '\n';
    }
    out << "rate_h,,,," << format_double(r.value_rate_h) << ',' << format_double(r.gradient_rate_h) << '\n';
    out << "rate_eps,,,," << format_double(r.value_rate_eps) << ',' << format_double(r.gradient_rate_eps) << '\n';
  }
  json summary = {{"value_rate_h", r.value_rate_h},
                  {"gradient_rate_h", r.gradient_rate_h},
                  {"value_rate_eps", r.value_rate_eps},
                  {"gradient_rate_eps", r.gradient_rate_eps},
                  {"eps_increments", r.eps_increments},
                  {"reference", exact ? "exact" : "finest solve"}};
  if (r.reference_consistency) summary["reference_consistency"] = *r.reference_consistency;

  if (get_or(st, "regularity", false)) {
    ConstrainedOptions opts = parse_options(cfg);
    opts.keep_stages = true;
    std::vector<RegularityRun> runs;
    for (const auto& sh : shapes) {
      const SolveReport rep = solve_constrained(problem, h, schedule, sh, opts);
      for (std::size_t k = 0; k < rep.stages.size(); ++k) runs.push_back({rep.stages[k].eps, rep.stage_solutions[k]});
    }
    const RegularityReport rr = regularity_scan(runs, opts.margin_cells);
    json spread = json::array();
    for (const auto& [hh, sp] : rr.second_diff_spread) spread.push_back({{"h", hh}, {"spread", sp}});
    summary["regularity"] = {{"interior_margin", rr.interior_margin},
                             {"sup_grad", rr.sup_grad},
                             {"sup_second_diff", rr.sup_second_diff},
                             {"holder_alpha_estimate", rr.holder_alpha_estimate},
                             {"second_diff_spread", spread}};
  }
  write_json(ctx.out_dir / "study.json", summary);
  ctx.say("study: value rate in h " + format_double(r.value_rate_h));
  return kExitOk;
}

double interpolate(const GridFunction& u, double x) {
  const Grid& g = u.grid();
  const double s = (x - g.lo[0]) / g.h[0];
  const int i = std::clamp(static_cast<int>(std::floor(s)), 0, g.n[0]);
  const double w = s - i;
  return (1.0 - w) * u.at(i) + w * u.at(i + 1);
}

int cmd_simulate(const Context& ctx) {
  const json& cfg = ctx.config;
  const json& mc = require(cfg, "mc");
  const EllipticProblem problem = parse_problem(cfg);
  if (problem.dim != 1) throw InputError("simulate: Monte Carlo is one-dimensional only");
  const bool explicit_region = mc.contains("region");
  if (!cfg.contains("constraint") && !explicit_region) throw InputError("free boundary required");

  std::optional<ConvexBody> body;
  if (mc.contains("K")) {
    body = parse_body(mc.at("K"), 1);
  } else if (cfg.contains("constraint")) {
    const json& c = cfg.at("constraint");
    const std::string kind = get_or<std::string>(c, "kind", "");
    if (kind == "norm") {
      const double r = get_or(c, "r", 1.0) / get_or(c, "w", 1.0);
      body = ConvexBody::interval(-r, r);
    } else if (kind == "support") {
      body = parse_body(require(c, "body"), 1);
    }
  }
  if (!body) throw InputError("simulate: mc.K is required for this constraint kind");

  McOptions opts;
  opts.n_paths = get_or(mc, "n_paths", opts.n_paths);
  opts.dt = get_or(mc, "dt", opts.dt);
  opts.seed = get_or<std::uint64_t>(mc, "seed", opts.seed);
  opts.threads = get_or(mc, "threads", opts.threads);
  const auto x0s = require(mc, "x0").get<std::vector<double>>();

  std::optional<Solved> s;
  if (cfg.contains("constraint")) s = solve_from_config(ctx);
  const ControlPolicy policy = [&] {
    if (explicit_region) {
      const auto r = mc.at("region").get<std::vector<double>>();
      if (r.size() != 2) throw InputError("config: mc.region must be [lo, hi]");
      return ControlPolicy::from_region(problem.lo[0], problem.hi[0], r[0], r[1]);
    }
    return ControlPolicy::from_solution(s->report);
  }();

  json estimates = json::array();
  for (double x0 : x0s) {
    const McEstimate e = estimate_value(problem, policy, *body, x0, opts);
    json j = {{"x0", e.x0}, {"mean", e.mean}, {"std_error", e.std_error}, {"n_paths", e.n_paths},
              {"dt", e.dt}, {"seed", e.seed}, {"warnings", e.warnings}};
    if (s) j["pde_value"] = interpolate(s->report.u, x0);
    for (const auto& w : e.warnings) ctx.say("warning: " + w);
    ctx.say("x0 = " + format_double(x0) + ": mean " + format_double(e.mean) + " +- " + format_double(e.std_error));
    estimates.push_back(j);
  }
  json bands = json::array();
  for (const auto& b : policy.bands()) bands.push_back({{"lo", b.lo}, {"hi", b.hi}, {"rho", b.rho}});
  write_json(ctx.out_dir / "mc.json", {{"estimates", estimates}, {"policy_bands", bands}});
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Gradient-constrained HJB solver"};
  app.require_subcommand(1);
  std::string config_path;
  std::string out_dir;
  bool quiet = false;
  for (const char* name : {"solve", "verify", "study", "simulate"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON run configuration")->required();
    sub->add_option("--out", out_dir, "output directory")->required();
    sub->add_flag("--quiet", quiet, "suppress progress output");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  Context ctx;
  ctx.quiet = quiet;
  ctx.out = &out;
  ctx.out_dir = out_dir;
  try {
    std::ifstream in(config_path);
    if (!in) throw InputError("cannot read config " + config_path);
    try {
      ctx.config = json::parse(in);
    } catch (const json::parse_error& e) {
      throw InputError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!ctx.config.is_object() || !ctx.config.contains("version")) throw InputError("config: missing \"version\"");
    if (ctx.config.at("version") != 1) throw InputError("config: unsupported version (expected 1)");
    std::error_code ec;
    fs::create_directories(ctx.out_dir, ec);
    if (ec || !fs::is_directory(ctx.out_dir)) throw InputError("cannot create output directory " + out_dir);

    if (command == "solve") return cmd_solve(ctx);
    if (command == "verify") return cmd_verify(ctx);
    if (command == "study") return cmd_study(ctx);
    return cmd_simulate(ctx);
  } catch (const PropertyFailure& e) {
    err << "error: " << e.what() << '\n';
    return kExitProperty;
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const json::exception& e) {
    err << "error: config: " << e.what() << '\n';
    return kExitConfig;
  } catch (const SolveError& e) {
    err << "error: " << e.what() << '\n';
    return kExitSolver;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitSolver;
  }
}

}  // namespace gchjb
