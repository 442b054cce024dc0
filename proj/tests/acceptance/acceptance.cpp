// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include "branchlab/analytic_field.hpp"
#include "branchlab/decay.hpp"
#include "branchlab/frequency.hpp"
#include "branchlab/minimizer.hpp"
#include "branchlab/profiles.hpp"
#include "branchlab/sampled_field.hpp"
#include "branchlab/spectral.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include "artifacts.hpp"
#include "config.hpp"
#include "experiments.hpp"

#include "helpers.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <unistd.h>

using namespace branchlab;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
  void note(const std::string& what) { detail += (detail.empty() ? "" : "; ") + what; }
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string fmt(const char* f, double a, double b) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

FieldPtr shared(AnalyticTwoValuedField f) { return std::make_shared<AnalyticTwoValuedField>(std::move(f)); }

CVec model_c() { return testing_support::to_cvec(testing_support::isotropic_c()); }

// X -> base(Q X) for a rotation Q
class RotatedField : public TwoValuedField {
 public:
  RotatedField(FieldPtr base, Mat Q) : base_(std::move(base)), Q_(std::move(Q)) {}
  int dim() const override { return base_->dim(); }
  int codim() const override { return base_->codim(); }
  UnorderedPair eval(const Vec& x) const override { return base_->eval(Q_ * x); }
  Jet jet(const Vec& x) const override {
    Jet j = base_->jet(Q_ * x);
    j.grad1 = j.grad1 * Q_;
    j.grad2 = j.grad2 * Q_;
    return j;
  }

 private:
  FieldPtr base_;
  Mat Q_;
};

// ------------------------------------------------------------------ criteria

Outcome frequency_of_model_solutions() {
  Outcome o;
  std::mt19937_64 rng(101);
  double worst = 0.0, slowest = 0.0;
  for (int n : {2, 3})
    for (int k = 1; k <= 6; ++k) {
      const auto t0 = std::chrono::steady_clock::now();
      const auto u = cylindrical(n, testing_support::to_cvec(testing_support::random_c(rng, 2)), k);
      const FrequencyProfile p = frequency_profile(u, Vec::Zero(n), {0.25, 0.5, 1.0}, QuadLevel::at(n == 2 ? 6 : 5));
      for (double N : p.N) worst = std::max(worst, std::abs(N - 0.5 * k) / (0.5 * k));
      slowest = std::max(slowest, seconds_since(t0));
    }
  o.require(worst <= 1e-6, "relative error above 1e-6");
  o.require(slowest < 10.0, "a case took 10 s or more");
  o.note(fmt("max rel err %.2e, slowest case %.2f s", worst, slowest));
  return o;
}

Outcome doubling_equality() {
  Outcome o;
  std::mt19937_64 rng(102);
  double worst = 0.0;
  for (int n : {2, 3})
    for (int k = 1; k <= 6; ++k) {
      const auto u = cylindrical(n, testing_support::to_cvec(testing_support::random_c(rng, 2)), k);
      for (double q : {0.5, 0.25}) {
        const DoublingCheck d = doubling_check(u, Vec::Zero(n), q, 1.0, 0.5 * k, QuadLevel::at(5));
        worst = std::max(worst, std::abs(d.H_sigma / d.H_rho / std::pow(q, k) - 1.0));
      }
    }
  o.require(worst <= 1e-8, "H ratio off by more than 1e-8");
  o.note(fmt("max rel err %.2e", worst));
  return o;
}

Outcome stationarity_identities() {
  Outcome o;
  const auto phi = cylindrical(2, model_c(), 1);
  const RefinementStudy s = stationarity_study(phi, default_stationarity_input(2, Vec::Zero(2), 1.0), 1, 5);
  o.require(s.squash_order >= 2.0, "squash order below 2");
  o.require(s.squeeze_order >= 2.0, "squeeze order below 2");
  o.require(s.radial_order >= 2.0, "radial order below 2");
  o.note(fmt("orders squash %.2f, squeeze %.2f", s.squash_order, s.squeeze_order) + fmt(", radial %.2f", s.radial_order));

  const auto control = angular_modes(2, {{0.5, 2.5, make_cvec({1.0})}, {2.5, 0.5, make_cvec({1.0})}});
  const RefinementStudy c = stationarity_study(control, default_stationarity_input(2, Vec::Zero(2), 1.0), 1, 5);
  const double floor = *std::min_element(c.squeeze.begin(), c.squeeze.end());
  o.require(floor > 1e-3 && c.squeeze.back() > 0.5 * c.squeeze.front(), "control squeeze residual vanishes");
  o.note(fmt("control squeeze >= %.3e", floor));
  return o;
}

Outcome new_monotonicity() {
  Outcome o;
  const std::vector<double> radii{0.2, 0.4, 0.6, 0.8};
  double worst = 0.0, worst_homog = 0.0, min_rhs = HUGE_VAL;
  for (int k : {1, 2, 3}) {
    const double alpha = 0.5 * k;
    for (double ratio : {1e-1, 1e-2}) {
      const CVec d = make_cvec({Complex(0.6 * ratio, 0.0), Complex(0.0, 0.8 * ratio)});
      const auto raw = power_sum(2, {{model_c(), k}, {d, k + 2}});
      const double norm = std::sqrt(ball_l2(raw, Frame::identity(2), 1.0, QuadLevel::at(5)));
      const auto u = raw.scaled(1.0 / norm);
      for (const auto& row : new_monotonicity_residual(u, Vec::Zero(2), alpha, radii)) {
        worst = std::max(worst, std::abs(row.lhs - row.rhs));
        min_rhs = std::min(min_rhs, row.rhs);
      }
    }
    const auto h = cylindrical(2, model_c(), k);
    const double norm = std::sqrt(ball_l2(h, Frame::identity(2), 1.0, QuadLevel::at(5)));
    for (const auto& row : new_monotonicity_residual(h.scaled(1.0 / norm), Vec::Zero(2), alpha, radii))
      worst_homog = std::max({worst_homog, std::abs(row.lhs), std::abs(row.rhs)});
  }
  o.require(worst <= 1e-6, "sides differ by more than 1e-6");
  o.require(min_rhs > 0.0, "right side not positive on the perturbed family");
  o.require(worst_homog <= 1e-9, "homogeneous sides do not vanish");
  o.note(fmt("max |lhs - rhs| %.2e, homogeneous max %.2e", worst, worst_homog));
  return o;
}

Outcome monotonicity_of_frequency() {
  Outcome o;
  std::vector<double> radii;
  for (int i = 0; i < 35; ++i) radii.push_back(0.05 + (0.9 - 0.05) * i / 34.0);
  double min_slope = HUGE_VAL;
  for (int i = 0; i < 20; ++i) {
    const nlohmann::json spec = {{"type", "random_power_sum"}, {"m", 2}, {"terms", 3}, {"index", i}};
    const FieldPtr u = cli::make_field(spec, 2024, fs::current_path());
    const MonotonicityReport rep = check_monotonicity(frequency_profile(*u, Vec::Zero(2), radii, QuadLevel::at(5)));
    min_slope = std::min(min_slope, rep.min_slope);
  }
  o.require(min_slope >= -1e-8, "slope violation below -1e-8");
  const auto control = angular_modes(2, {{0.5, 2.5, make_cvec({1.0})}, {2.5, 0.5, make_cvec({1.0})}});
  const MonotonicityReport bad = check_monotonicity(frequency_profile(control, Vec::Zero(2), radii, QuadLevel::at(5)));
  o.require(!bad.pass(), "control shows no violation");
  o.note(fmt("min slope over 20 fields %.3e, control violations %.0f", min_slope, double(bad.violations.size())));
  return o;
}

Outcome branch_detection() {
  Outcome o;
  double worst_pos = 0.0, worst_N = 0.0;
  for (double t : {0.1, 0.3}) {
    const FieldPtr u = shared(branch_polynomial(2, make_cvec({1.0, Complex(0.0, -1.0)}), {Complex(t, 0.0), Complex(-t, 0.0)}));
    const SingularReport rep = detect_branch_set(u);
    int branch = 0;
    for (const auto& c : rep.candidates) {
      if (c.kind != CandidateKind::branch) continue;
      ++branch;
      const double pos = std::min((c.x - testing_support::vec({t, 0.0})).norm(), (c.x - testing_support::vec({-t, 0.0})).norm());
      worst_pos = std::max(worst_pos, pos / rep.cell_size);
      worst_N = std::max(worst_N, std::abs(c.frequency - 0.5));
    }
    o.require(branch == 2, "expected two branch candidates at t = " + fmt("%g", t));
    o.require(rep.isolated, "candidates not isolated");
  }
  o.require(worst_pos <= 1.0, "candidate farther than one cell");
  o.require(worst_N <= 0.02, "frequency outside [0.48, 0.52]");
  o.note(fmt("max offset %.2e cells, max |N - 1/2| %.2e", worst_pos, worst_N));
  return o;
}

Outcome minimizer_recovery() {
  Outcome o;
  const auto u = cylindrical(2, model_c(), 1);
  std::vector<double> errs;
  std::shared_ptr<SampledField> finest;
  double finest_time = 0.0;
  for (int N : {32, 64, 128}) {
    const auto t0 = std::chrono::steady_clock::now();
    CoverGrid g;
    g.n_radial = N;
    g.n_theta = N;
    const CoverField f = solve_branched_laplace(boundary_from_field(u, 1.0, 4 * N), g, {{Vec::Zero(2)}});
    finest = std::make_shared<SampledField>(f.to_two_valued());
    finest_time = seconds_since(t0);
    errs.push_back(std::sqrt(l2_distance_sq(*finest, u, Vec::Zero(2), 1.0, QuadLevel::at(5))));
  }
  double order = HUGE_VAL;
  for (std::size_t i = 1; i < errs.size(); ++i) order = std::min(order, std::log2(errs[i - 1] / errs[i]));
  const double N0 = frequency_at_point(*finest, Vec::Zero(2), 0.5).estimate;
  o.require(order >= 1.0, "L2 order below 1");
  o.require(N0 >= 0.48 && N0 <= 0.52, "center frequency outside [0.48, 0.52]");
  o.require(finest_time < 60.0, "finest grid took 60 s or more");
  o.note(fmt("L2 order %.2f, center N %.6f", order, N0) + fmt(", finest %.2f s", finest_time));
  return o;
}

struct DecaySetup {
  FieldPtr u;
  int n;
};

DecaySetup decay_field(int n) {
  const CVec d = make_cvec({Complex(0.003, 0.002), Complex(-0.001, 0.004)});
  return {shared(power_sum(n, {{model_c(), 1}, {d, 3}})), n};
}

DecayRun decay_run(const DecaySetup& s, double theta) {
  DecayOptions opt;
  opt.theta = theta;
  opt.j_max = 4;
  return iterate(s.u, Vec::Zero(s.n), CylindricalProfile(s.n, make_cvec({1.0, Complex(0.0, 0.8)}), 1), opt);
}

Outcome decay_rates() {
  Outcome o;
  double worst_ratio = 0.0, worst_c = 0.0, worst_unique = 0.0, worst_dc = 0.0;
  for (int n : {2, 3}) {
    const DecaySetup s = decay_field(n);
    const DecayRun a = decay_run(s, 0.125);
    const DecayRun b = decay_run(s, 0.0625);
    int steps = 0;
    for (const auto& st : a.steps) {
      if (st.j == 0) continue;
      ++steps;
      worst_ratio = std::max(worst_ratio, std::abs(st.ratio / (0.125 * 0.125) - 1.0));
    }
    o.require(steps >= 3, "fewer than 3 decay steps for n = " + std::to_string(n));
    worst_c = std::max({worst_c, (a.limit.c() - model_c()).norm(), (b.limit.c() - model_c()).norm()});
    worst_unique = std::max(worst_unique, excess(a.limit, b.limit, Vec::Zero(n), 1.0));
    worst_dc = std::max(worst_dc, (a.limit.c() - b.limit.c()).norm());
  }
  o.require(worst_ratio <= 0.2, "per-step ratio outside theta^2 +- 20%");
  o.require(worst_c <= 1e-4, "limit c farther than 1e-4");
  // each limit is within 1e-4 of the truth, so two limits may differ by at most 2e-4
  o.require(worst_dc <= 2e-4 && worst_unique <= 2e-8, "limits for theta = 1/8 and 1/16 disagree");
  o.note(fmt("max |ratio/theta^2 - 1| %.2e, max |c - c0| %.2e", worst_ratio, worst_c) +
         fmt(", limit excess %.2e, |dc| %.2e", worst_unique, worst_dc));
  return o;
}

Outcome exponent_table() {
  Outcome o;
  double worst = 0.0, min_sup = HUGE_VAL;
  for (int n : {2, 3}) {
    const DecaySetup s = decay_field(n);
    const DecayRun run = decay_run(s, 0.125);
    const TangentResult t = tangent_expansion(s.u, Vec::Zero(n), run);
    worst = std::max(worst, std::abs(t.l2_slope - (t.k + 2.0)));
    min_sup = std::min(min_sup, t.sup_slope - t.k);
    o.require(t.k == 1, "tangent k is not 1");
  }
  o.require(worst <= 0.1, "L2 slope not within k + 2 +- 0.1");
  o.require(min_sup >= 0.0, "sup slope below k");
  o.note(fmt("max |l2 slope - (k + 2)| %.3e, min sup slope - k %.3f", worst, min_sup));
  return o;
}

Outcome spectral_projection() {
  Outcome o;
  double pyth = 0.0, in_L = 0.0, max_ratio = 0.0;
  for (int n : {2, 3})
    for (int k : {1, 2, 3}) {
      const CylindricalProfile phi(n, make_cvec({1.0, Complex(0.0, 1.0)}), k);
      const double a = phi.alpha();
      const CoverFunction member = [phi, a](double r, double th, const Vec& y) -> Vec {
        Vec v = Vec::Zero(2);
        v[0] = 0.3 * std::pow(r, a) * std::cos(a * th);
        v[1] = -0.7 * std::pow(r, a) * std::sin(a * th);
        if (y.size() > 0) v += 0.4 * y[0] * profile_derivative(phi, 0, r, th);
        return v;
      };
      const CoverFunction mixed = [member, a](double r, double th, const Vec& y) -> Vec {
        Vec v = member(r, th, y);
        v[0] += std::pow(r, a + 1.0) * std::cos((a + 1.0) * th);
        v[1] += 0.5 * std::pow(r, a + 2.0) * std::sin((a + 2.0) * th);
        return v;
      };
      const Projection pm = project_L(member, phi, 1.0);
      in_L = std::max(in_L, pm.remainder_norm_sq / pm.w_norm_sq);
      pyth = std::max(pyth, project_L(mixed, phi, 1.0).pythagoras_defect);
      for (const auto& s : radial_decay_check(mixed, phi).scales) max_ratio = std::max(max_ratio, s.ratio);
    }
  o.require(pyth <= 1e-10, "Pythagoras defect above 1e-10");
  o.require(in_L <= 1e-10, "members of L not reproduced");
  o.require(max_ratio < 1.0, "radial ratio not below 1");

  // blow-ups of a rotated stationary field: the half-space term must vanish
  Eigen::VectorXd p(2);
  p << 0.03, -0.02;
  const Mat Q = skew_from_parameters(3, p).exp();
  const CVec d = make_cvec({Complex(0.03, 0.02), Complex(-0.01, 0.04)});
  const auto u = std::make_shared<RotatedField>(shared(power_sum(3, {{model_c(), 1}, {d, 3}})), Q);
  DecayOptions opt;
  opt.j_max = 2;
  opt.probe_gaps = false;
  const DecayRun run = iterate(u, Vec::Zero(3), CylindricalProfile(3, make_cvec({1.0, Complex(0.0, 0.8)}), 1), opt);
  const DecayRecord& last = run.steps.back();
  const auto blow = std::make_shared<ScaledField>(u, Vec::Zero(3), last.scale, std::pow(last.scale, -0.5));
  const CoverFunction w = cover_difference(blow, last.profile, std::sqrt(last.excess));
  double half = -HUGE_VAL, half_limit = 0.0, half_unc = 0.0;
  for (int i = 0; i < 2; ++i) {
    const BoundaryTermEstimate b = half_case_boundary_term(w, last.profile, 0, i, Vec::Zero(1));
    half = std::max(half, std::abs(b.limit) - 3.0 * b.uncertainty);
    half_limit = std::max(half_limit, std::abs(b.limit));
    half_unc = std::max(half_unc, b.uncertainty);
  }
  o.require(half <= 1e-6, "half-space boundary term does not vanish on blow-ups");
  o.note(fmt("Pythagoras %.2e, L remainder %.2e", pyth, in_L) + fmt(", max radial ratio %.4f", max_ratio) +
         fmt(", half term |limit| %.2e +- %.1e", half_limit, half_unc));
  return o;
}

Outcome ratio_boundedness() {
  Outcome o;
  double worst = 0.0;
  for (int n : {2, 3}) {
    std::map<std::string, std::vector<double>> ratios;
    for (double t : {1e-1, 1e-2, 1e-3}) {
      const CVec d = make_cvec({Complex(0.3 * t, 0.2 * t), Complex(-0.1 * t, 0.4 * t)});
      const auto u = power_sum(n, {{model_c(), 1}, {d, 3}});
      CorollaryParams prm;
      prm.level = QuadLevel::at(n == 2 ? 5 : 4);
      for (const auto& row : corollary_checks(u, CylindricalProfile(n, model_c(), 1), prm)) ratios[row.name].push_back(row.ratio);
    }
    for (const auto& [name, r] : ratios) {
      const auto [lo, hi] = std::minmax_element(r.begin(), r.end());
      const double spread = *lo > 0.0 ? *hi / *lo : HUGE_VAL;
      worst = std::max(worst, spread);
      o.require(spread < 3.0, name + " ratio varies by 3x or more");
    }
  }
  o.note(fmt("max ratio spread %.4f", worst));
  return o;
}

Outcome determinism() {
  Outcome o;
  const fs::path root = fs::temp_directory_path() / ("branchlab_acceptance_" + std::to_string(::getpid()));
  int compared = 0;
  for (const auto& entry : fs::directory_iterator(BRANCHLAB_CONFIG_DIR)) {
    if (entry.path().extension() != ".json") continue;
    nlohmann::json j = nlohmann::json::parse(cli::read_file(entry.path()));
    const fs::path out = root / entry.path().stem();
    j["output_dir"] = out.string();
    const cli::ExperimentConfig cfg = cli::parse_config(j, entry.path().parent_path());
    cli::run_experiment(cfg);
    fs::remove_all(out.string() + ".first");
    fs::rename(out, out.string() + ".first");
    cli::run_experiment(cfg);
    for (const auto& f : fs::directory_iterator(out)) {
      const fs::path first = fs::path(out.string() + ".first") / f.path().filename();
      o.require(fs::exists(first) && cli::read_file(first) == cli::read_file(f.path()),
                entry.path().stem().string() + "/" + f.path().filename().string() + " differs");
      ++compared;
    }
  }
  fs::remove_all(root);
  o.require(compared > 0, "no artifacts compared");
  o.note(std::to_string(compared) + " artifacts byte-identical");
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"C1  frequency of model solutions", frequency_of_model_solutions},
      {"C2  doubling equality", doubling_equality},
      {"C3  stationarity identities", stationarity_identities},
      {"C4  weighted radial monotonicity identity", new_monotonicity},
      {"C5  monotonicity of N", monotonicity_of_frequency},
      {"C6  branch detection (n = 2)", branch_detection},
      {"C7  minimizer recovery", minimizer_recovery},
      {"C8  decay iteration rates", decay_rates},
      {"C9  tangent exponent table", exponent_table},
      {"C10 spectral projection", spectral_projection},
      {"C11 inequality ratio boundedness", ratio_boundedness},
      {"C12 determinism", determinism},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    if (!o.pass) ++failed;
    std::printf("[%s] %-45s %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
