#include "experiments.hpp"

#include "artifacts.hpp"

#include "branchlab/analytic_field.hpp"
#include "branchlab/decay.hpp"
#include "branchlab/frequency.hpp"
#include "branchlab/minimizer.hpp"
#include "branchlab/profiles.hpp"
#include "branchlab/sampled_field.hpp"
#include "branchlab/spectral.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

namespace branchlab::cli {

namespace {

using nlohmann::json;

struct Check {
  std::string stage;
  std::string name;
  bool pass = false;
  double value = 0.0;
  double threshold = 0.0;
  std::string relation;
};

json number(double v) { return std::isfinite(v) ? json(v) : json(format_double(v)); }

json cvec_json(const CVec& c) {
  json a = json::array();
  for (int i = 0; i < c.size(); ++i) a.push_back({c[i].real(), c[i].imag()});
  return a;
}

json vec_json(const Vec& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

class Context {
 public:
  Context(const ExperimentConfig& cfg, ArtifactWriter& out) : cfg(cfg), out(out) {}

  const ExperimentConfig& cfg;
  ArtifactWriter& out;
  json results = json::object();
  std::vector<Check> checks;
  json stages = json::array();
  bool numerical_failure = false;

  void check(const std::string& stage, const std::string& name, bool pass, double value, double threshold,
             const std::string& relation) {
    checks.push_back({stage, name, pass, value, threshold, relation});
  }

  void stage(const std::string& name, const std::function<void()>& body) {
    json s = {{"name", name}};
    try {
      body();
      s["status"] = "ok";
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      s["status"] = "error";
      s["error"] = e.what();
      numerical_failure = true;
    }
    stages.push_back(s);
  }

  Vec center(int n) const {
    Vec Z = Vec::Zero(n);
    if (!cfg.params.contains("center")) return Z;
    const std::vector<double> c = param_doubles(cfg.params, "center", {});
    if (static_cast<int>(c.size()) != n) throw ConfigError("/params/center", "/params/center: expected n numbers");
    for (int d = 0; d < n; ++d) Z[d] = c[d];
    return Z;
  }

  QuadLevel level(const std::string& key, int fallback) const { return QuadLevel::at(param_int(cfg.params, key, fallback)); }
};

/// Lowest homogeneous mode of an analytic field as a profile guess.
std::optional<CylindricalProfile> leading_profile(const TwoValuedField& u) {
  const auto* a = dynamic_cast<const AnalyticTwoValuedField*>(&u);
  if (!a) return std::nullopt;
  const auto* modes = std::get_if<std::vector<AngularMode>>(&a->symmetric_part());
  if (!modes || modes->empty()) return std::nullopt;
  const AngularMode* best = nullptr;
  for (const auto& m : *modes)
    if (std::abs(m.beta - m.omega) < 1e-12 && (!best || m.beta < best->beta)) best = &m;
  if (!best) return std::nullopt;
  const int k = static_cast<int>(std::lround(2.0 * best->beta));
  if (std::abs(2.0 * best->beta - k) > 1e-12) return std::nullopt;
  return CylindricalProfile(u.dim(), best->c, k);
}

CylindricalProfile profile_guess(const Context& ctx, const TwoValuedField& u) {
  const json& p = ctx.cfg.params;
  if (p.contains("guess")) {
    const json& g = p["guess"];
    if (!g.is_object() || !g.contains("c") || !g.contains("k"))
      throw ConfigError("/params/guess", "/params/guess: expected {c, k}");
    json spec = {{"type", "cylindrical"}, {"n", u.dim()}, {"c", g["c"]}, {"k", g["k"]}};
    const FieldPtr f = make_field(spec, 0, ctx.cfg.base_dir, "/params/guess");
    const auto* a = dynamic_cast<const AnalyticTwoValuedField*>(f.get());
    const auto& m = std::get<std::vector<AngularMode>>(a->symmetric_part()).front();
    return CylindricalProfile(u.dim(), m.c, g["k"].get<int>());
  }
  if (auto lp = leading_profile(u)) return *lp;
  throw ConfigError("/params/guess", "/params/guess: required for this field type");
}

double c_distance(const CVec& a, const CVec& b) { return std::min((a - b).norm(), (a + b).norm()); }

// ---------------------------------------------------------------- frequency

void run_frequency(Context& ctx, const FieldPtr& u) {
  const int n = u->dim();
  const Vec Y = ctx.center(n);
  const QuadLevel level = ctx.level("level", n == 2 ? 5 : 4);
  const double tol = param_double(ctx.cfg.params, "tol", 1e-6);
  FrequencyProfile prof;
  ctx.stage("frequency_profile", [&] {
    prof = frequency_profile(*u, Y, param_doubles(ctx.cfg.params, "radii", {0.25, 0.5, 1.0}), level);
    const auto dN = prof.dN_drho();
    CsvTable t({"rho", "D", "H", "N", "dN_drho"});
    for (std::size_t i = 0; i < prof.radii.size(); ++i) t.add_row({prof.radii[i], prof.D[i], prof.H[i], prof.N[i], dN[i]});
    ctx.out.write("frequency.csv", t.str());
    ctx.out.write("frequency.svg", svg_plot("frequency", "rho", "N", {{"N", prof.radii, prof.N}}, true, false));
    double spread = 0.0;
    for (double N : prof.N) spread = std::max(spread, std::abs(N - prof.N.front()) / std::max(1e-300, std::abs(prof.N.front())));
    ctx.check("frequency_profile", "N_constant", spread <= tol, spread, tol, "<=");
    if (ctx.cfg.params.contains("expected_N")) {
      const double e = param_double(ctx.cfg.params, "expected_N", 0.0);
      double dev = 0.0;
      for (double N : prof.N) dev = std::max(dev, std::abs(N - e) / std::max(1e-300, std::abs(e)));
      ctx.check("frequency_profile", "N_expected", dev <= tol, dev, tol, "<=");
    }
    ctx.results["N"] = prof.N;
  });
  ctx.stage("doubling", [&] {
    const double rho = param_double(ctx.cfg.params, "doubling_rho", 1.0);
    const double dtol = param_double(ctx.cfg.params, "doubling_tol", 1e-8);
    const auto Nr = frequency_profile(*u, Y, {rho}, level).N.front();
    CsvTable t({"sigma", "rho", "H_ratio", "predicted", "rel_error", "lower_ok", "upper_ok"});
    double worst = 0.0;
    bool bounds = true;
    for (double s : param_doubles(ctx.cfg.params, "doubling_ratios", {0.5, 0.25})) {
      const auto fp = frequency_profile(*u, Y, {s * rho, rho}, level);
      const double ratio = fp.H[0] / fp.H[1];
      const double pred = std::pow(s, 2.0 * Nr);
      const double rel = std::abs(ratio - pred) / pred;
      const DoublingCheck dc = doubling_check(*u, Y, s * rho, rho, Nr, level);
      worst = std::max(worst, rel);
      bounds = bounds && dc.lower_ok && dc.upper_ok;
      t.add_row({s * rho, rho, ratio, pred, rel, dc.lower_ok ? 1.0 : 0.0, dc.upper_ok ? 1.0 : 0.0});
    }
    ctx.out.write("doubling.csv", t.str());
    if (param_bool(ctx.cfg.params, "homogeneous", true))
      ctx.check("doubling", "doubling_equality", worst <= dtol, worst, dtol, "<=");
    ctx.check("doubling", "doubling_bounds", bounds, bounds ? 1.0 : 0.0, 1.0, "==");
  });
  ctx.stage("point_frequency", [&] {
    const PointFrequency pf = frequency_at_point(*u, Y, param_double(ctx.cfg.params, "point_radius", 0.5), 6, level);
    ctx.results["point_frequency"] = {{"estimate", pf.estimate}, {"uncertainty", pf.uncertainty},
                                      {"monotone", pf.monotone}, {"low_confidence", pf.low_confidence}};
  });
}

// ------------------------------------------------------------- monotonicity

void run_monotonicity(Context& ctx, const FieldPtr& base) {
  const json& p = ctx.cfg.params;
  const int family = param_int(p, "family_size", 1);
  if (family < 1) throw ConfigError("/params/family_size", "/params/family_size: must be positive");
  const double rho_min = param_double(p, "rho_min", 0.05), rho_max = param_double(p, "rho_max", 0.9);
  const int count = param_int(p, "count", 35);
  const double slack = param_double(p, "slack", 1e-8);
  if (!(rho_min > 0.0 && rho_max > rho_min) || count < 3)
    throw ConfigError("/params/rho_min", "/params/rho_min: need 0 < rho_min < rho_max and count >= 3");
  std::vector<double> radii(count);
  for (int i = 0; i < count; ++i) radii[i] = rho_min + (rho_max - rho_min) * i / (count - 1);
  const int n = base->dim();
  const Vec Y = ctx.center(n);
  const QuadLevel level = ctx.level("level", n == 2 ? 4 : 3);

  auto member = [&](int index) -> FieldPtr {
    if (family == 1) return base;
    json spec = ctx.cfg.field;
    spec["index"] = index;
    return make_field(spec, ctx.cfg.seed, ctx.cfg.base_dir);
  };

  ctx.stage("monotonicity", [&] {
    CsvTable t({"member", "rho", "N", "slope"});
    double min_slope = HUGE_VAL;
    int violations = 0;
    std::vector<Series> plot;
    for (int f = 0; f < family; ++f) {
      const FieldPtr u = member(f);
      const FrequencyProfile prof = frequency_profile(*u, Y, radii, level);
      const MonotonicityReport rep = check_monotonicity(prof, slack);
      const auto dN = prof.dN_drho();
      for (int i = 0; i < count; ++i) t.add_row({double(f), radii[i], prof.N[i], dN[i]});
      min_slope = std::min(min_slope, rep.min_slope);
      violations += static_cast<int>(rep.violations.size());
      if (f < 6) plot.push_back({"member " + std::to_string(f), radii, prof.N});
    }
    ctx.out.write("monotonicity.csv", t.str());
    ctx.out.write("monotonicity.svg", svg_plot("frequency against radius", "rho", "N", plot, false, false));
    ctx.check("monotonicity", "monotone", violations == 0, min_slope, -slack, ">=");
    ctx.results["monotonicity"] = {{"min_slope", number(min_slope)}, {"violations", violations}};
  });

  if (param_bool(p, "stationarity", true)) {
    ctx.stage("stationarity", [&] {
      const double order_min = param_double(p, "order_min", 2.0);
      const double radius = param_double(p, "stationarity_radius", 1.0);
      const RefinementStudy st = stationarity_study(*base, default_stationarity_input(n, Y, radius),
                                                    param_int(p, "first_level", 1), param_int(p, "last_level", n == 2 ? 5 : 4));
      CsvTable t({"level", "squash", "squeeze", "radial"});
      std::vector<double> lv;
      for (std::size_t i = 0; i < st.levels.size(); ++i) {
        t.add_row({double(st.levels[i]), st.squash[i], st.squeeze[i], st.radial[i]});
        lv.push_back(st.levels[i]);
      }
      ctx.out.write("stationarity.csv", t.str());
      ctx.out.write("stationarity.svg",
                    svg_plot("stationarity residuals", "level", "residual",
                             {{"squash", lv, st.squash}, {"squeeze", lv, st.squeeze}, {"radial", lv, st.radial}},
                             false, true));
      ctx.check("stationarity", "squash_order", st.squash_order >= order_min, st.squash_order, order_min, ">=");
      ctx.check("stationarity", "squeeze_order", st.squeeze_order >= order_min, st.squeeze_order, order_min, ">=");
      ctx.check("stationarity", "radial_order", st.radial_order >= order_min, st.radial_order, order_min, ">=");
      ctx.results["stationarity"] = {{"squash_order", number(st.squash_order)},
                                     {"squeeze_order", number(st.squeeze_order)},
                                     {"radial_order", number(st.radial_order)},
                                     {"squeeze_finest", number(st.squeeze.back())}};
    });
  }

  if (p.contains("alpha")) {
    ctx.stage("new_monotonicity", [&] {
      const double alpha = param_double(p, "alpha", 0.5);
      const double tol = param_double(p, "new_monotonicity_tol", 1e-6);
      const auto rows = new_monotonicity_residual(*base, Y, alpha, param_doubles(p, "new_monotonicity_radii", {0.3, 0.5, 0.7}),
                                                  ctx.level("new_monotonicity_level", 5));
      CsvTable t({"rho", "lhs", "rhs", "residual"});
      double worst = 0.0;
      for (const auto& r : rows) {
        t.add_row({r.rho, r.lhs, r.rhs, r.residual});
        worst = std::max(worst, std::abs(r.residual));
      }
      ctx.out.write("new_monotonicity.csv", t.str());
      ctx.check("new_monotonicity", "new_monotonicity", worst <= tol, worst, tol, "<=");
    });
  }
}

// ----------------------------------------------------------------- minimize

void run_minimize(Context& ctx, const FieldPtr& u) {
  const json& p = ctx.cfg.params;
  if (u->dim() != 2) throw ConfigError("/field/n", "/field/n: minimize requires n = 2");
  const double radius = param_double(p, "radius", 1.0);
  std::vector<double> grids = param_doubles(p, "grids", {32, 64, 128});
  BranchConfiguration config;
  if (p.contains("branch_points")) {
    const json& bp = p["branch_points"];
    if (!bp.is_array()) throw ConfigError("/params/branch_points", "/params/branch_points: expected an array");
    for (std::size_t i = 0; i < bp.size(); ++i) {
      if (!bp[i].is_array() || bp[i].size() != 2 || !bp[i][0].is_number() || !bp[i][1].is_number())
        throw ConfigError("/params/branch_points/" + std::to_string(i), "/params/branch_points: expected [x, y] pairs");
      Vec x(2);
      x << bp[i][0].get<double>(), bp[i][1].get<double>();
      config.points.push_back(x);
    }
  } else {
    config.points.push_back(Vec::Zero(2));
  }
  ctx.stage("solve", [&] {
    CsvTable t({"n_radial", "n_theta", "l2_error", "energy", "iterations", "residual", "order"});
    std::vector<double> hs, errs;
    std::shared_ptr<SampledField> finest;
    for (double g : grids) {
      const int N = static_cast<int>(g);
      if (N < 4 || N != g) throw ConfigError("/params/grids", "/params/grids: expected integers >= 4");
      CoverGrid grid;
      grid.n_radial = N;
      grid.n_theta = N;
      grid.radius = radius;
      const BoundaryTable bt = boundary_from_field(*u, radius, 4 * N);
      const CoverField cf = solve_branched_laplace(bt, grid, config, param_double(p, "solver_tol", 1e-10));
      finest = std::make_shared<SampledField>(cf.to_two_valued());
      const double err = std::sqrt(l2_distance_sq(*finest, *u, Vec::Zero(2), radius, QuadLevel::at(5)));
      const double order = errs.empty() ? 0.0 : std::log(errs.back() / err) / std::log(static_cast<double>(N) / hs.back());
      t.add_row({double(N), double(N), err, cf.energy(), double(cf.iterations()), cf.residual(), order});
      hs.push_back(N);
      errs.push_back(err);
    }
    ctx.out.write("minimize.csv", t.str());
    std::vector<double> inv;
    for (double h : hs) inv.push_back(1.0 / h);
    ctx.out.write("minimize.svg", svg_plot("L2 error against grid spacing", "1/N", "L2 error", {{"error", inv, errs}}, true, true));
    double order = HUGE_VAL;
    for (std::size_t i = 1; i < errs.size(); ++i)
      order = std::min(order, std::log(errs[i - 1] / errs[i]) / std::log(hs[i] / hs[i - 1]));
    const double order_min = param_double(p, "order_min", 1.0);
    if (errs.size() >= 2) ctx.check("solve", "l2_order", order >= order_min, order, order_min, ">=");
    ctx.results["l2_errors"] = errs;
    if (param_bool(p, "write_field", false)) {
      std::ostringstream os;
      finest->write_csv(os);
      ctx.out.write("solution.csv", os.str());
    }
    const PointFrequency pf = frequency_at_point(*finest, Vec::Zero(2), param_double(p, "point_radius", 0.5));
    const double lo = param_double(p, "center_N_min", 0.48), hi = param_double(p, "center_N_max", 0.52);
    ctx.check("solve", "center_frequency", pf.estimate >= lo && pf.estimate <= hi, pf.estimate, lo, "in [" +
              format_double(lo) + ", " + format_double(hi) + "]");
    ctx.results["center_frequency"] = {{"estimate", pf.estimate}, {"uncertainty", pf.uncertainty}};
  });
}

// -------------------------------------------------------------------- decay

void run_decay(Context& ctx, const FieldPtr& u) {
  const json& p = ctx.cfg.params;
  const int n = u->dim();
  const Vec Z = ctx.center(n);
  const CylindricalProfile guess = profile_guess(ctx, *u);
  const std::vector<double> thetas = param_doubles(p, "thetas", {0.125, 0.0625});
  const double ratio_tol = param_double(p, "ratio_tol", 0.2);
  const int min_steps = param_int(p, "min_steps", 3);
  std::vector<DecayRun> runs;
  for (double th : thetas) {
    const std::string tag = "theta_" + format_double(th);
    ctx.stage("iterate_" + tag, [&] {
      DecayOptions opt;
      opt.theta = th;
      opt.j_max = param_int(p, "j_max", 4);
      opt.delta0 = param_double(p, "delta0", 0.0);
      opt.eps0 = param_double(p, "eps0", 0.0);
      opt.probe_gaps = param_bool(p, "probe_gaps", true);
      const DecayRun run = iterate(u, Z, guess, opt);
      CsvTable t({"j", "scale", "excess", "ratio", "normalized_ratio", "drift", "outcome"});
      std::vector<double> js, es;
      int good = 0, steps = 0;
      double worst = 0.0;
      for (const auto& s : run.steps) {
        t.add_row(std::vector<std::string>{std::to_string(s.j), format_double(s.scale), format_double(s.excess),
                                           format_double(s.ratio), format_double(s.ratio / (th * th)),
                                           format_double(s.drift), to_string(s.outcome)});
        js.push_back(s.j);
        es.push_back(s.excess);
        if (s.j >= 1 && s.outcome == StepOutcome::decay) {
          ++steps;
          const double dev = std::abs(s.ratio / (th * th) - 1.0);
          worst = std::max(worst, dev);
          good += dev <= ratio_tol;
        }
      }
      ctx.out.write("decay_" + tag + ".csv", t.str());
      ctx.out.write("decay_" + tag + ".svg", svg_plot("excess per step", "j", "excess", {{"E_j^2", js, es}}, false, true));
      ctx.check("iterate_" + tag, "excess_ratio_" + tag, steps >= min_steps && good == steps, worst, ratio_tol, "<=");
      const auto lead = leading_profile(*u);
      const CVec truth = lead ? lead->c() : guess.c();
      const double cd = c_distance(run.limit.c(), truth);
      const double ctol = param_double(p, "c_tol", 1e-4);
      ctx.check("iterate_" + tag, "limit_c_" + tag, cd <= ctol, cd, ctol, "<=");
      ctx.results[tag] = {{"two_mu", number(run.two_mu)},
                          {"stop_reason", run.stop_reason},
                          {"pure_decay", run.pure_decay},
                          {"limit_c", cvec_json(run.limit.c())},
                          {"steps", run.steps.size()}};
      runs.push_back(run);
    });
  }
  if (runs.size() >= 2) {
    ctx.stage("uniqueness", [&] {
      const double d = excess(runs[0].limit, runs[1].limit, Vec::Zero(n), 1.0, default_fit_level(n));
      const double tol = param_double(p, "uniqueness_tol", 2e-8);
      ctx.check("uniqueness", "tangent_uniqueness", d <= tol, d, tol, "<=");
    });
  }
  if (!runs.empty() && param_bool(p, "tangent", true)) {
    ctx.stage("tangent", [&] {
      TangentOptions topt;
      topt.scales = param_int(p, "tangent_scales", 9);
      if (n >= 3) topt.level = QuadLevel::at(3);
      const TangentResult tr = tangent_expansion(u, Z, runs.front(), topt);
      CsvTable t({"sigma", "l2", "sup"});
      std::vector<double> s, l2, sup;
      for (const auto& r : tr.table) {
        t.add_row({r.sigma, r.l2, r.sup});
        s.push_back(r.sigma);
        l2.push_back(r.l2);
        sup.push_back(r.sup);
      }
      ctx.out.write("tangent.csv", t.str());
      ctx.out.write("tangent.svg", svg_plot("tangent error tables", "sigma", "error", {{"l2", s, l2}, {"sup", s, sup}}, true, true));
      const double gamma = param_double(p, "gamma", 2.0);
      const double stol = param_double(p, "slope_tol", 0.1);
      const double target = tr.k + gamma;
      ctx.check("tangent", "l2_slope", std::abs(tr.l2_slope - target) <= stol, tr.l2_slope, target, "+-" + format_double(stol));
      ctx.check("tangent", "sup_slope", tr.sup_slope >= tr.k, tr.sup_slope, tr.k, ">=");
      ctx.results["tangent"] = {{"k", tr.k}, {"c", cvec_json(tr.c)}, {"gamma", number(tr.gamma)},
                                {"l2_slope", number(tr.l2_slope)}, {"sup_slope", number(tr.sup_slope)},
                                {"average_residual", number(tr.average_residual)}};
    });
  }
}

// ----------------------------------------------------------------- spectral

void run_spectral(Context& ctx, const FieldPtr& u) {
  const json& p = ctx.cfg.params;
  const int n = u->dim();
  const CylindricalProfile guess = profile_guess(ctx, *u);
  CylindricalProfile phi = guess;
  ctx.stage("fit", [&] {
    phi = fit_profile(*u, guess, FitOptions{}).profile;
    ctx.results["fit_c"] = cvec_json(phi.c());
  });
  const CoverFunction w = cover_difference(u, phi, param_double(p, "scale", 1.0));
  ctx.stage("projection", [&] {
    const double rho = param_double(p, "rho", 1.0);
    const Projection pr = project_L(w, phi, rho, ctx.level("level", n == 2 ? 4 : 3));
    CsvTable t({"index", "coefficient"});
    for (int i = 0; i < pr.coefficients.size(); ++i) t.add_row({double(i), pr.coefficients[i]});
    ctx.out.write("projection.csv", t.str());
    const double tol = param_double(p, "pythagoras_tol", 1e-10);
    ctx.check("projection", "pythagoras", pr.pythagoras_defect <= tol, pr.pythagoras_defect, tol, "<=");
    ctx.results["projection"] = {{"w_norm_sq", pr.w_norm_sq}, {"psi_norm_sq", pr.psi_norm_sq},
                                 {"remainder_norm_sq", pr.remainder_norm_sq}, {"gram_condition", pr.gram_condition},
                                 {"orthogonality", pr.orthogonality}};
  });
  ctx.stage("radial_decay", [&] {
    DecayCheckOptions opt;
    opt.theta = param_double(p, "theta", 0.125);
    const DecayCheckReport rep = radial_decay_check(w, phi, opt);
    CsvTable t({"rho", "radial_inner", "radial_outer", "ratio", "remainder_scaled", "lambda_sq"});
    double worst = 0.0;
    for (const auto& s : rep.scales) {
      t.add_row({s.rho, s.radial_inner, s.radial_outer, s.ratio, s.remainder_scaled, s.lambda_sq});
      worst = std::max(worst, s.ratio);
    }
    ctx.out.write("radial_decay.csv", t.str());
    ctx.check("radial_decay", "radial_ratio_below_one", worst < 1.0, worst, 1.0, "<");
    ctx.results["radial_decay"] = {{"gamma", number(rep.gamma)}, {"two_mu", number(rep.two_mu)},
                                   {"hypotheses_hold", rep.hypotheses_hold}, {"decay_ratio", number(rep.decay_ratio)}};
  });
  if (phi.k() == 1 && n >= 3 && param_bool(p, "half_term", true)) {
    ctx.stage("half_term", [&] {
      CsvTable t({"p", "i", "limit", "uncertainty"});
      double worst = 0.0;
      for (int pp = 0; pp < n - 2; ++pp)
        for (int i = 0; i < 2; ++i) {
          const BoundaryTermEstimate b = half_case_boundary_term(w, phi, pp, i, Vec::Zero(n - 2), 0.2, 8, u->resolution());
          t.add_row({double(pp), double(i), b.limit, b.uncertainty});
          worst = std::max(worst, std::abs(b.limit) - 3.0 * b.uncertainty);
        }
      ctx.out.write("half_term.csv", t.str());
      const double tol = param_double(p, "half_term_tol", 1e-6);
      ctx.check("half_term", "half_term_vanishes", worst <= tol, worst, tol, "<=");
    });
  }
}

// ------------------------------------------------------------- corollaries

void run_corollaries(Context& ctx, const FieldPtr& base) {
  const json& p = ctx.cfg.params;
  const int n = base->dim();
  CorollaryParams cp;
  cp.gamma = param_double(p, "gamma", 0.5);
  cp.sigma = param_double(p, "sigma", 0.5);
  cp.delta = param_double(p, "delta", 0.05);
  cp.level = ctx.level("level", n == 2 ? 5 : 3);
  std::vector<double> ts = param_doubles(p, "ts", {1.0});
  auto member = [&](double t) -> FieldPtr {
    if (!p.contains("ts")) return base;
    json spec = ctx.cfg.field;
    if (spec.value("type", "") != "power_sum")
      throw ConfigError("/params/ts", "/params/ts: perturbation sweeps need a power_sum field");
    for (std::size_t i = 1; i < spec["terms"].size(); ++i) {
      json& c = spec["terms"][i]["c"];
      for (auto& e : c) {
        if (e.is_number()) e = e.get<double>() * t;
        else e = json::array({e[0].get<double>() * t, e[1].get<double>() * t});
      }
    }
    return make_field(spec, ctx.cfg.seed, ctx.cfg.base_dir);
  };
  ctx.stage("corollaries", [&] {
    CsvTable t({"t", "name", "lhs", "rhs", "ratio"});
    std::map<std::string, std::pair<double, double>> range;
    for (double tt : ts) {
      const FieldPtr u = member(tt);
      const CylindricalProfile phi = fit_profile(*u, profile_guess(ctx, *u), FitOptions{}).profile;
      for (const auto& row : corollary_checks(*u, phi, cp)) {
        t.add_row(std::vector<std::string>{format_double(tt), row.name, format_double(row.lhs), format_double(row.rhs),
                                           format_double(row.ratio)});
        auto it = range.find(row.name);
        if (it == range.end()) range[row.name] = {row.ratio, row.ratio};
        else it->second = {std::min(it->second.first, row.ratio), std::max(it->second.second, row.ratio)};
      }
    }
    ctx.out.write("corollaries.csv", t.str());
    const double factor = param_double(p, "stability_factor", 3.0);
    if (ts.size() >= 2)
      for (const auto& [name, r] : range) {
        const double spread = r.first > 0.0 ? r.second / r.first : HUGE_VAL;
        ctx.check("corollaries", "ratio_stability_" + name, spread < factor, spread, factor, "<");
      }
  });
}

// ------------------------------------------------------------ full pipeline

void run_pipeline(Context& ctx, const FieldPtr& u) {
  const json& p = ctx.cfg.params;
  const int n = u->dim();
  if (n > 3) throw ConfigError("/field/n", "/field/n: the pipeline supports n <= 3");
  SingularReport rep;
  ctx.stage("detect", [&] {
    DetectOptions det;
    det.cells = param_int(p, "cells", 32);
    det.half_width = param_double(p, "half_width", 0.9);
    det.axial_half_width = param_double(p, "axial_half_width", 0.9);
    det.slices = param_int(p, "slices", 0);
    rep = detect_branch_set(u, det);
    if (param_bool(p, "stratify", n == 3)) rep = stratify(u, rep);
    CsvTable t({"index", "kind", "x1", "x2", "x3", "frequency", "uncertainty", "low_confidence", "branch_evidence",
                "stratum", "ambiguous"});
    for (std::size_t i = 0; i < rep.candidates.size(); ++i) {
      const auto& c = rep.candidates[i];
      t.add_row(std::vector<std::string>{std::to_string(i), c.kind == CandidateKind::branch ? "branch" : "touching",
                                         format_double(c.x[0]), format_double(c.x[1]),
                                         n >= 3 ? format_double(c.x[2]) : "0", format_double(c.frequency),
                                         format_double(c.uncertainty), c.low_confidence ? "1" : "0",
                                         c.branch_evidence ? "1" : "0", std::to_string(c.stratum),
                                         c.ambiguous ? "1" : "0"});
    }
    ctx.out.write("candidates.csv", t.str());
    int branch = 0;
    for (const auto& c : rep.candidates) branch += c.kind == CandidateKind::branch;
    ctx.check("detect", "branch_points_found", branch >= 1, branch, 1, ">=");
    if (n == 2) ctx.check("detect", "isolated", rep.isolated, rep.isolated ? 1.0 : 0.0, 1.0, "==");
    ctx.results["detect"] = {{"cell_size", rep.cell_size}, {"candidates", rep.candidates.size()},
                             {"discarded_low_frequency", rep.discarded_low_frequency}};
  });
  ctx.stage("blowups", [&] {
    const int max_candidates = param_int(p, "max_candidates", 4);
    CsvTable t({"index", "k", "two_mu", "stop_reason", "l2_slope", "sup_slope", "limit_c_norm"});
    int done = 0;
    for (std::size_t i = 0; i < rep.candidates.size() && done < max_candidates; ++i) {
      const auto& c = rep.candidates[i];
      if (c.kind != CandidateKind::branch || c.low_confidence) continue;
      if (n == 3 && std::abs(c.x[2]) > 0.25) continue;
      ++done;
      const int k = std::max(1, static_cast<int>(std::lround(2.0 * c.frequency)));
      CVec c0 = CVec::Zero(u->codim());
      c0[0] = 1.0;
      const double reach = std::isfinite(u->domain_radius()) ? u->domain_radius() - (c.x - u->domain_center()).norm()
                                                             : 1.0;
      double scale = std::min(1.0, 0.9 * reach);
      for (const auto& o : rep.candidates)
        if (&o != &c && o.kind == CandidateKind::branch) scale = std::min(scale, 0.25 * (o.x - c.x).norm());
      const FieldPtr local = std::make_shared<ScaledField>(u, c.x, scale, 1.0);
      CylindricalProfile guess(n, c0, k);
      try {
        guess = fit_profile(*local, guess, FitOptions{}).profile;
      } catch (const Error&) {
      }
      DecayOptions opt;
      opt.theta = param_double(p, "theta", 0.125);
      opt.j_max = param_int(p, "j_max", 3);
      opt.probe_gaps = param_bool(p, "probe_gaps", false);
      const DecayRun run = iterate(local, Vec::Zero(n), guess, opt);
      double l2s = NAN, sups = NAN;
      if (run.steps.size() >= 2 && param_bool(p, "tangent", true)) {
        TangentOptions topt;
        topt.scales = param_int(p, "tangent_scales", 7);
        topt.level = QuadLevel::at(3);
        const TangentResult tr = tangent_expansion(local, Vec::Zero(n), run, topt);
        l2s = tr.l2_slope;
        sups = tr.sup_slope;
      }
      t.add_row(std::vector<std::string>{std::to_string(i), std::to_string(k), format_double(run.two_mu), run.stop_reason,
                                         format_double(l2s), format_double(sups), format_double(run.limit.c().norm())});
    }
    ctx.out.write("blowups.csv", t.str());
  });
}

json checks_json(const Context& ctx) {
  json a = json::array();
  for (const auto& c : ctx.checks) {
    const bool expected = ctx.cfg.expect_fail.count(c.name) > 0;
    std::string status = c.pass ? (expected ? "UNEXPECTED-PASS" : "PASS") : (expected ? "EXPECTED-FAIL" : "FAIL");
    a.push_back({{"stage", c.stage}, {"name", c.name}, {"pass", c.pass}, {"expected_fail", expected},
                 {"status", status}, {"value", number(c.value)}, {"threshold", number(c.threshold)},
                 {"relation", c.relation}});
  }
  return a;
}

}  // namespace

int run_experiment(const ExperimentConfig& cfg) {
  ArtifactWriter out(cfg.output_dir);
  Context ctx(cfg, out);
  const FieldPtr u = make_field(cfg.field, cfg.seed, cfg.base_dir);
  out.write_json("config.json", cfg.raw);
  switch (cfg.kind) {
    case ExperimentKind::frequency: run_frequency(ctx, u); break;
    case ExperimentKind::monotonicity: run_monotonicity(ctx, u); break;
    case ExperimentKind::minimize: run_minimize(ctx, u); break;
    case ExperimentKind::decay: run_decay(ctx, u); break;
    case ExperimentKind::spectral: run_spectral(ctx, u); break;
    case ExperimentKind::corollaries: run_corollaries(ctx, u); break;
    case ExperimentKind::full_pipeline:
      run_pipeline(ctx, u);
      if (u->dim() == 2 && param_bool(cfg.params, "frequency_at_branch_points", false)) run_frequency(ctx, u);
      break;
  }
  json summary = {{"schema_version", kSchemaVersion},
                  {"kind", to_string(cfg.kind)},
                  {"seed", cfg.seed},
                  {"stages", ctx.stages},
                  {"checks", checks_json(ctx)},
                  {"results", ctx.results}};
  out.write_json("summary.json", summary);
  out.finish();
  return ctx.numerical_failure ? kExitNumerical : kExitOk;
}

namespace {

struct RunReport {
  std::string name;
  std::vector<std::array<std::string, 4>> rows;  // check, status, value, threshold
  std::vector<std::string> problems;
};

RunReport report_run(const std::filesystem::path& dir, const std::string& name) {
  RunReport r;
  r.name = name;
  const json manifest = json::parse(read_file(dir / "manifest.json"));
  bool has_summary = false;
  for (const auto& f : manifest.at("files")) {
    const std::string file = f.at("name").get<std::string>();
    has_summary = has_summary || file == "summary.json";
    if (!std::filesystem::exists(dir / file)) {
      r.problems.push_back("missing file " + file);
      continue;
    }
    if (sha256_hex(read_file(dir / file)) != f.at("sha256").get<std::string>()) r.problems.push_back("hash mismatch " + file);
  }
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    const std::string file = e.path().filename().string();
    if (file == "manifest.json" || !e.is_regular_file()) continue;
    bool listed = false;
    for (const auto& f : manifest.at("files")) listed = listed || f.at("name").get<std::string>() == file;
    if (!listed) r.problems.push_back("unlisted file " + file);
  }
  if (!has_summary) {
    r.problems.push_back("no summary.json in manifest");
    return r;
  }
  const json summary = json::parse(read_file(dir / "summary.json"));
  for (const auto& s : summary.at("stages"))
    if (s.at("status") != "ok") r.problems.push_back("stage " + s.at("name").get<std::string>() + " failed: " +
                                                     s.value("error", std::string("unknown error")));
  for (const auto& c : summary.at("checks")) {
    auto show = [](const json& v) { return v.is_number() ? format_double(v.get<double>()) : v.get<std::string>(); };
    const std::string rel = c.at("relation").get<std::string>();
    r.rows.push_back({c.at("name").get<std::string>(), c.at("status").get<std::string>(), show(c.at("value")),
                      rel.rfind("in [", 0) == 0 ? rel : rel + " " + show(c.at("threshold"))});
  }
  return r;
}

}  // namespace

int report_directory(const std::filesystem::path& dir, std::ostream& os) {
  if (!std::filesystem::is_directory(dir)) throw ConfigError("", "not a directory: " + dir.string());
  std::vector<std::pair<std::filesystem::path, std::string>> runs;
  if (std::filesystem::exists(dir / "manifest.json")) {
    runs.emplace_back(dir, dir.filename().string());
  } else {
    std::vector<std::filesystem::path> subs;
    for (const auto& e : std::filesystem::directory_iterator(dir))
      if (e.is_directory() && std::filesystem::exists(e.path() / "manifest.json")) subs.push_back(e.path());
    std::sort(subs.begin(), subs.end());
    for (const auto& s : subs) runs.emplace_back(s, s.filename().string());
  }
  if (runs.empty()) throw ConfigError("", "no manifest.json under " + dir.string());
  bool green = true;
  os << std::left << std::setw(28) << "run" << std::setw(40) << "check" << std::setw(16) << "status" << std::setw(24)
     << "value" << "criterion\n";
  for (const auto& [path, name] : runs) {
    const RunReport r = report_run(path, name);
    for (const auto& row : r.rows) {
      os << std::setw(28) << name << std::setw(40) << row[0] << std::setw(16) << row[1] << std::setw(24) << row[2] << row[3]
         << "\n";
      green = green && (row[1] == "PASS" || row[1] == "EXPECTED-FAIL");
    }
    for (const auto& prob : r.problems) {
      os << std::setw(28) << name << "ERROR " << prob << "\n";
      green = false;
    }
  }
  os << (green ? "ALL GREEN" : "FAILURES PRESENT") << "\n";
  return green ? kExitOk : kExitChecksFailed;
}

}  // namespace branchlab::cli
