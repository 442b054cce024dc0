#include <doctest.h>

#include "branchlab/analytic_field.hpp"
#include "branchlab/sampled_field.hpp"

#include "helpers.hpp"

#include <random>
#include <sstream>

using namespace branchlab;
using testing_support::vec;

namespace {

bool close_pair(const UnorderedPair& a, const UnorderedPair& b, double tol) { return metric_g(a, b) <= tol; }

UnorderedPair sym_pair(std::initializer_list<double> v) { return UnorderedPair::symmetric(vec(v)); }

}  // namespace

TEST_CASE("cylindrical half power at simple points") {
  const auto u = cylindrical(2, make_cvec({1.0}), 1);
  CHECK(close_pair(u.eval(vec({1.0, 0.0})), sym_pair({1.0}), 1e-15));
  // Re(i^{1/2}) = cos(pi/4)
  CHECK(close_pair(u.eval(vec({0.0, 1.0})), sym_pair({std::sqrt(0.5)}), 1e-15));
  CHECK(close_pair(u.eval(vec({0.0, 0.0})), UnorderedPair::zero(1), 0.0));
}

TEST_CASE("integer power is a pair of linear maps") {
  // c = (1, i): Re(z) = x1, Re(i z) = -x2
  const auto u = cylindrical(2, make_cvec({1.0, Complex(0.0, 1.0)}), 2);
  const Vec x = vec({0.3, -0.7});
  const Jet j = u.jet(x);
  CHECK(close_pair(j.value, sym_pair({0.3, 0.7}), 1e-14));
  Mat expected(2, 2);
  expected << 1.0, 0.0, 0.0, -1.0;
  const bool first_plus = (j.value.a1 - vec({0.3, 0.7})).norm() < 1e-12;
  CHECK(((first_plus ? j.grad1 : j.grad2) - expected).norm() < 1e-13);
  CHECK(((first_plus ? j.grad2 : j.grad1) + expected).norm() < 1e-13);
}

TEST_CASE("branch polynomial symmetric part vanishes at its roots") {
  for (int j = 2; j <= 5; ++j) {
    const double t = 1.0 / j;
    const auto u = branch_polynomial(2, make_cvec({Complex(1.0, 1.0)}), {Complex(t, 0.0), Complex(-t, 0.0)});
    CHECK(u.eval(vec({t, 0.0})).norm() < 1e-14);
    CHECK(u.eval(vec({-t, 0.0})).norm() < 1e-14);
    CHECK(u.eval(vec({0.0, 0.0})).norm() > 0.1 * t);
  }
}

TEST_CASE("single-valued field has equal sheets and equal gradients") {
  VectorPolynomial h(2, 1);
  h.add_constant(vec({2.0}));
  h.add_complex_power(make_cvec({Complex(1.0, 0.5)}), 1);
  const auto u = single_valued(2, h);
  const Jet j = u.jet(vec({0.4, 0.1}));
  CHECK((j.value.a1 - j.value.a2).norm() == 0.0);
  CHECK((j.grad1 - j.grad2).norm() == 0.0);
}

TEST_CASE("analytic gradient matches central differences") {
  std::mt19937_64 rng(3);
  const auto u = power_sum(3, {{testing_support::to_cvec(testing_support::random_c(rng, 2)), 1},
                               {testing_support::to_cvec(testing_support::random_c(rng, 2)), 3}});
  std::uniform_real_distribution<double> d(-0.8, 0.8);
  for (int trial = 0; trial < 50; ++trial) {
    const Vec x = vec({d(rng), d(rng), d(rng)});
    if (std::hypot(x[0], x[1]) < 0.1) continue;
    const Jet j = u.jet(x);
    const double h = 1e-6;
    for (int a = 0; a < 3; ++a) {
      Vec xp = x, xm = x;
      xp[a] += h;
      xm[a] -= h;
      const UnorderedPair p = aligned(j.value, u.eval(xp)), m = aligned(j.value, u.eval(xm));
      const Vec fd = (p.a1 - m.a1) / (2.0 * h);
      CHECK((fd - j.grad1.col(a)).norm() < 1e-7);
    }
  }
}

TEST_CASE("property: cylindrical fields are homogeneous and independent of y") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  for (int k = 1; k <= 4; ++k) {
    const auto u = cylindrical(3, testing_support::to_cvec(testing_support::random_c(rng, 2)), k);
    for (int trial = 0; trial < 40; ++trial) {
      const Vec x = vec({d(rng), d(rng), d(rng)});
      const double lambda = 0.1 + std::abs(d(rng)) * 3.0;
      const UnorderedPair a = u.eval(lambda * x);
      UnorderedPair b = u.eval(x);
      const double f = std::pow(lambda, 0.5 * k);
      b.a1 *= f;
      b.a2 *= f;
      CHECK(metric_g(a, b) <= 1e-12 * (1.0 + b.norm()));
      Vec x2 = x;
      x2[2] += d(rng);
      CHECK(metric_g(u.eval(x), u.eval(x2)) == 0.0);
    }
  }
}

TEST_CASE("sampled field interpolation converges under refinement") {
  const auto u = std::make_shared<AnalyticTwoValuedField>(cylindrical(2, make_cvec({1.0}), 3));
  const auto err = [&](int points) {
    CartesianGrid g;
    g.n = 2;
    g.center = Vec::Zero(2);
    g.points = points;
    const SampledField s = SampledField::sample(*u, g);
    double e = 0.0;
    for (const Vec& x : {vec({0.31, 0.42}), vec({-0.5, 0.2}), vec({0.1, -0.6}), vec({-0.35, -0.35})}) {
      const Jet ref = u->jet(x);
      const Jet got = s.jet(x);
      const UnorderedPair al = aligned(ref.value, got.value);
      const bool same = (al.a1 - got.value.a1).norm() == 0.0;
      e = std::max(e, ((same ? got.grad1 : got.grad2) - ref.grad1).norm());
    }
    return e;
  };
  const double e1 = err(33), e2 = err(65);
  CHECK(e2 < e1);
  CHECK(e1 / e2 > 3.0);
}

TEST_CASE("sampled field csv round trip is exact") {
  const auto u = branch_polynomial(2, make_cvec({1.0, Complex(0.0, 1.0)}), {Complex(0.25, 0.0), Complex(-0.25, 0.0)});
  PolarGrid g;
  g.center = Vec::Zero(2);
  g.n_radial = 8;
  g.n_theta = 16;
  const SampledField s = SampledField::sample(u, g);
  std::stringstream ss;
  s.write_csv(ss);
  const SampledField back = SampledField::read_csv(ss);
  CHECK(back.identical(s));
}

TEST_CASE("normalized rescale of a homogeneous field has unit mean square and fixed shape") {
  const auto u = std::make_shared<AnalyticTwoValuedField>(cylindrical(2, testing_support::to_cvec(testing_support::isotropic_c()), 1));
  const auto a = normalized_rescale(u, Vec::Zero(2), 0.3);
  const auto b = normalized_rescale(u, Vec::Zero(2), 0.05);
  const double ball = oracle::planar_ball_l2({{testing_support::isotropic_c(), 0.5}}, 1.0);
  const Vec x = vec({0.2, 0.7});
  CHECK(metric_g(a->eval(x), b->eval(x)) < 1e-10);
  UnorderedPair ref = u->eval(x);
  ref.a1 /= std::sqrt(ball);
  ref.a2 /= std::sqrt(ball);
  CHECK(metric_g(a->eval(x), ref) < 1e-8);
}

TEST_CASE("rescalings of a perturbed field approach the leading profile at the oracle rate") {
  // u = phi + psi with phi = Re(c z^{1/2}), psi = Re(d z^{3/2}); modes are L2-orthogonal on B_1.
  // For small rho the identity pairing is optimal everywhere and
  // d(u_rho, phi_1)^2 = 2 (1 - 1 / sqrt(1 + rho^2 B / A)) with A, B the squared norms.
  const auto c = testing_support::isotropic_c();
  const std::vector<oracle::cplx> dd{{0.3, 0.0}, {0.0, 0.1}};
  const auto u = std::make_shared<AnalyticTwoValuedField>(testing_support::power_field(2, {{c, 0.5}, {dd, 1.5}}));
  const auto phi = std::make_shared<AnalyticTwoValuedField>(cylindrical(2, testing_support::to_cvec(c), 1));
  const double A = oracle::planar_ball_l2({{c, 0.5}}, 1.0);
  const double B = oracle::planar_ball_l2({{dd, 1.5}}, 1.0);
  for (double rho : {0.1, 0.05, 0.025}) {
    const auto ur = normalized_rescale(u, Vec::Zero(2), rho);
    const auto pr = normalized_rescale(phi, Vec::Zero(2), 1.0);
    const double got = l2_distance_sq(*ur, *pr, Vec::Zero(2), 1.0, QuadLevel::at(4));
    const double expect = 2.0 * (1.0 - 1.0 / std::sqrt(1.0 + rho * rho * B / A));
    CHECK(got == doctest::Approx(expect).epsilon(1e-6));
  }
}

TEST_CASE("L2 distance between two profiles matches the closed form") {
  std::mt19937_64 rng(19);
  const auto c = testing_support::random_c(rng, 2);
  auto c2 = c;
  c2[0] += oracle::cplx(0.01, -0.02);
  c2[1] += oracle::cplx(0.015, 0.0);
  const auto u = cylindrical(2, testing_support::to_cvec(c), 3);
  const auto v = cylindrical(2, testing_support::to_cvec(c2), 3);
  std::vector<oracle::cplx> diff(2);
  for (int q = 0; q < 2; ++q) diff[q] = c[q] - c2[q];
  // where the identity pairing is optimal: 2 int |Re((c - c') z^{3/2})|^2 = planar ball norm of the difference
  const double expect = oracle::planar_ball_l2({{diff, 1.5}}, 1.0);
  const double got = l2_distance_sq(u, v, Vec::Zero(2), 1.0, QuadLevel::at(5));
  CHECK(got <= expect * (1.0 + 1e-8));
  CHECK(got == doctest::Approx(expect).epsilon(1e-2));
}

TEST_CASE("L2 distance quadrature converges") {
  // pairings switch along curves, so the integrand has kinks
  const auto u = cylindrical(2, make_cvec({1.0, Complex(0.0, 0.5)}), 1);
  const auto v = cylindrical(2, make_cvec({0.9, Complex(0.1, 0.5)}), 3);
  const ConvergenceStudy s = l2_distance_sq_study(u, v, Vec::Zero(2), 1.0, 1, 5);
  CHECK(s.differences.back() < s.differences.front());
  CHECK(s.differences.back() < 1e-4 * s.values.back());
}

TEST_CASE("invalid inputs are rejected") {
  CHECK_THROWS_AS(power_sum(2, {{make_cvec({1.0}), 1}, {make_cvec({1.0}), 2}}), InvalidInput);
  const auto u = std::make_shared<AnalyticTwoValuedField>(single_valued(2, VectorPolynomial(2, 1)));
  CHECK_THROWS_AS(normalized_rescale(u, Vec::Zero(2), 0.5), DegenerateRescale);
}
