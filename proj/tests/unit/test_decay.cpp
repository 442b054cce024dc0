#include <doctest.h>

#include "branchlab/analytic_field.hpp"
#include "branchlab/decay.hpp"

#include "helpers.hpp"

#include <algorithm>

using namespace branchlab;
using testing_support::vec;

namespace {

CVec model_c() { return testing_support::to_cvec(testing_support::isotropic_c()); }

FieldPtr shared(AnalyticTwoValuedField f) { return std::make_shared<AnalyticTwoValuedField>(std::move(f)); }

std::vector<Vec> square_loop(double cx, double cy, double h) {
  return {vec({cx - h, cy - h}), vec({cx + h, cy - h}), vec({cx + h, cy + h}), vec({cx - h, cy + h})};
}

// phi + t Re(d z^{b}) with d chosen so the extra term is not small relative to t
FieldPtr perturbed(int n, double t, int k_extra) {
  const CVec d = make_cvec({Complex(0.3 * t, 0.2 * t), Complex(-0.1 * t, 0.4 * t)});
  return shared(power_sum(n, {{model_c(), 1}, {d, k_extra}}));
}

}  // namespace

TEST_CASE("loop holonomy of half and integer powers") {
  const auto half = cylindrical(2, model_c(), 1);
  const auto whole = cylindrical(2, model_c(), 2);
  CHECK(loop_holonomy(half, square_loop(0.0, 0.0, 0.1)) == -1);
  CHECK(loop_holonomy(whole, square_loop(0.0, 0.0, 0.1)) == 1);
  CHECK(loop_holonomy(half, square_loop(0.5, 0.5, 0.1)) == 1);
}

TEST_CASE("detect: model solution has a single branch point of frequency 1/2") {
  const SingularReport rep = detect_branch_set(shared(cylindrical(2, make_cvec({1.0}), 1)));
  REQUIRE(rep.candidates.size() == 1);
  const BranchCandidate& c = rep.candidates.front();
  CHECK(c.kind == CandidateKind::branch);
  CHECK(c.branch_evidence);
  CHECK(c.x.norm() < 1e-8);
  CHECK(c.frequency == doctest::Approx(0.5).epsilon(1e-4));
}

TEST_CASE("detect: two branch points of the branch polynomial are isolated") {
  const double t = 0.3;
  const SingularReport rep =
      detect_branch_set(shared(branch_polynomial(2, make_cvec({1.0, Complex(0.0, -1.0)}), {Complex(t, 0.0), Complex(-t, 0.0)})));
  REQUIRE(rep.candidates.size() == 2);
  CHECK(rep.isolated);
  for (const auto& c : rep.candidates) {
    CHECK(std::abs(std::abs(c.x[0]) - t) < 1e-8);
    CHECK(std::abs(c.x[1]) < 1e-8);
    CHECK(c.frequency == doctest::Approx(0.5).epsilon(1e-4));
  }
}

TEST_CASE("detect: a degenerate single-valued pair touches without branching") {
  VectorPolynomial h(2, 1);
  h.add_complex_power(make_cvec({1.0}), 2);  // x1^2 - x2^2
  const SingularReport rep = detect_branch_set(shared(single_valued(2, h)));
  REQUIRE(!rep.candidates.empty());
  for (const auto& c : rep.candidates) CHECK_FALSE(c.branch_evidence);
  bool touching_at_origin = false;
  for (const auto& c : rep.candidates)
    if (c.kind == CandidateKind::touching && c.x.norm() < 0.1) touching_at_origin = true;
  CHECK(touching_at_origin);
}

TEST_CASE("gap probe") {
  const double alpha = 0.5, delta0 = 0.1;
  SingularReport full;
  for (int i = -20; i <= 20; ++i) {
    BranchCandidate c;
    c.x = vec({0.0, 0.0, 0.05 * i});
    c.frequency = alpha;
    full.candidates.push_back(c);
  }
  CHECK_FALSE(gap_probe(full, delta0, alpha, 3).has_value());

  SingularReport half = full;
  half.candidates.erase(std::remove_if(half.candidates.begin(), half.candidates.end(),
                                       [](const BranchCandidate& c) { return c.x[2] > 0.0; }),
                        half.candidates.end());
  const auto w = gap_probe(half, delta0, alpha, 3);
  REQUIRE(w.has_value());
  CHECK((*w)[0] > 0.0);

  const auto first = gap_probe(SingularReport{}, delta0, alpha, 3);
  REQUIRE(first.has_value());
  CHECK((*first)[0] == doctest::Approx(-0.5));
}

TEST_CASE("gap probe finds where a capped branch set drops below alpha") {
  // frequency 3/2 on the axis up to y_cap = 0.1 and 1/2 beyond, so an alpha = 3/2 profile has a gap there
  const FieldPtr u = shared(capped_branch(3, model_c(), 1.0, 0.1));
  DetectOptions det;
  det.half_width = 0.15;
  det.axial_half_width = 0.6;
  det.cells = 8;
  det.slices = 24;
  det.frequency_level = QuadLevel::at(2);
  const SingularReport rep = detect_branch_set(u, det);
  CHECK_FALSE(gap_probe(rep, 0.06, 0.5, 3).has_value());
  const auto w = gap_probe(rep, 0.06, 1.5, 3);
  REQUIRE(w.has_value());
  CHECK((*w)[0] > 0.1);
}

TEST_CASE("decay step ratio follows the homogeneity of the perturbation") {
  const double theta = 0.125;
  const CylindricalProfile phi(2, model_c(), 1);
  CHECK(decay_step(shared(cylindrical(2, model_c(), 1)), phi, theta).ratio < 1e-20);
  // extra degree s above alpha gives ratio theta^{2 s}
  for (double t : {1e-2, 1e-3}) {
    CHECK(decay_step(perturbed(2, t, 3), phi, theta).ratio == doctest::Approx(theta * theta).epsilon(1e-3));
    CHECK(decay_step(perturbed(2, t, 5), phi, theta).ratio == doctest::Approx(std::pow(theta, 4.0)).epsilon(1e-3));
  }
}

TEST_CASE("iteration on the exact profile sees no excess") {
  DecayOptions opt;
  opt.j_max = 3;
  opt.probe_gaps = false;
  const DecayRun run = iterate(shared(cylindrical(2, model_c(), 1)), Vec::Zero(2), CylindricalProfile(2, model_c(), 1), opt);
  for (const auto& s : run.steps) CHECK(s.excess < 1e-24);
  CHECK(run.pure_decay);
}

TEST_CASE("iteration converges to the leading coefficients at rate theta^2") {
  for (int n : {2, 3}) {
    DecayOptions opt;
    opt.j_max = 3;
    opt.probe_gaps = n == 2;
    const DecayRun run = iterate(perturbed(n, 1e-2, 3), Vec::Zero(n),
                                 CylindricalProfile(n, make_cvec({1.0, Complex(0.0, 0.8)}), 1), opt);
    CHECK((run.limit.c() - model_c()).norm() < 1e-8);
    CHECK(run.limit.k() == 1);
    REQUIRE(run.steps.size() >= 3);
    for (std::size_t j = 2; j < run.steps.size(); ++j) {
      CHECK(run.steps[j].ratio == doctest::Approx(opt.theta * opt.theta).epsilon(0.05));
      CHECK(run.steps[j].drift <= 0.25 * run.steps[j - 1].drift + 1e-30);
    }
  }
}

TEST_CASE("tangent expansion") {
  DecayOptions opt;
  opt.j_max = 3;
  opt.probe_gaps = false;
  const CylindricalProfile guess(2, model_c(), 1);

  const FieldPtr exact = shared(cylindrical(2, model_c(), 1));
  const TangentResult te = tangent_expansion(exact, Vec::Zero(2), iterate(exact, Vec::Zero(2), guess, opt));
  CHECK(te.exact);
  for (const auto& row : te.table) CHECK(row.l2 < 1e-24);

  const FieldPtr u = perturbed(2, 1e-2, 3);
  const TangentResult tp = tangent_expansion(u, Vec::Zero(2), iterate(u, Vec::Zero(2), guess, opt));
  CHECK(tp.k == 1);
  CHECK(tp.l2_slope == doctest::Approx(3.0).epsilon(0.03));
  CHECK(tp.gamma == doctest::Approx(2.0).epsilon(0.05));
  CHECK(tp.sup_slope >= 1.0);
}

TEST_CASE("middle slope of an exact power law") {
  std::vector<double> x, y;
  for (int i = 0; i < 12; ++i) {
    x.push_back(-0.5 * i);
    y.push_back(3.0 * x.back() + 1.25);
  }
  double b = 0.0;
  CHECK(middle_slope(x, y, &b) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(b == doctest::Approx(1.25).epsilon(1e-12));
}

TEST_CASE("translated frequency stays below alpha") {
  const auto u3 = cylindrical(3, model_c(), 1);
  const TranslatedFrequencyReport on_axis = translated_frequency_check(u3, vec({0.0, 0.0, 0.3}), 0.5, 0.1, 4.0);
  for (double N : on_axis.N) CHECK(N == doctest::Approx(0.5).epsilon(1e-8));
  CHECK(on_axis.within_bound);

  const auto u2 = cylindrical(2, model_c(), 1);
  // the ball about X1 contains the branch point, so the default level is too coarse here
  const TranslatedFrequencyReport off =
      translated_frequency_check(u2, vec({0.2, 0.0}), 0.5, 0.1, 6.0, 12, 0.1, QuadLevel::at(5));
  CHECK(off.nondecreasing);
  CHECK(off.max_excess <= 1e-10);
  CHECK(off.N.front() < off.N.back());
  CHECK(off.N.back() > 0.45);
}

TEST_CASE("stratification") {
  const FieldPtr u2 = shared(cylindrical(2, model_c(), 1));
  const SingularReport s2 = stratify(u2, detect_branch_set(u2));
  REQUIRE(s2.candidates.size() == 1);
  CHECK(s2.candidates.front().stratum == 0);

  const FieldPtr u3 = shared(cylindrical(3, model_c(), 1));
  DetectOptions det;
  det.half_width = 0.2;
  det.axial_half_width = 0.3;
  det.cells = 8;
  det.slices = 4;
  det.frequency_level = QuadLevel::at(2);
  const SingularReport s3 = stratify(u3, detect_branch_set(u3, det));
  REQUIRE(!s3.candidates.empty());
  for (const auto& c : s3.candidates) {
    CHECK(c.stratum == 1);
    CHECK_FALSE(c.ambiguous);
  }
}

TEST_CASE("stratification flags the end of a capped branch set") {
  // y_cap sits on a detection slice so a candidate lands exactly on the end point
  const double y_cap = 0.025;
  const FieldPtr u = shared(capped_branch(3, model_c(), 1.0, y_cap));
  DetectOptions det;
  det.half_width = 0.15;
  det.axial_half_width = 0.3;
  det.cells = 8;
  det.slices = 12;
  det.frequency_level = QuadLevel::at(2);
  StratifyOptions st;
  st.probe_distance = 0.25;
  const SingularReport rep = stratify(u, detect_branch_set(u, det), st);
  bool interior_clean = false, end_ambiguous = false;
  for (const auto& c : rep.candidates) {
    if (c.kind != CandidateKind::branch) continue;
    if (c.x[2] > y_cap + 0.05 && c.stratum == 1 && !c.ambiguous) interior_clean = true;
    if (std::abs(c.x[2] - y_cap) < 1e-12 && c.ambiguous) end_ambiguous = true;
  }
  CHECK(interior_clean);
  CHECK(end_ambiguous);
}
