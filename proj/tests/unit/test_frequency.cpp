#include <doctest.h>

#include "branchlab/analytic_field.hpp"
#include "branchlab/frequency.hpp"

#include "helpers.hpp"

#include <random>

using namespace branchlab;
using testing_support::vec;

namespace {

const std::vector<double> kRadii{0.2, 0.35, 0.5, 0.65, 0.8, 1.0};

AngularMode mode(double beta, double omega, std::vector<oracle::cplx> c) {
  return {beta, omega, testing_support::to_cvec(c)};
}

// r^{1/2} cos(5 theta / 2) + r^{5/2} cos(theta / 2): the radial and angular degrees disagree
AnalyticTwoValuedField non_stationary_control() {
  return angular_modes(2, {mode(0.5, 2.5, {1.0}), mode(2.5, 0.5, {1.0})});
}

}  // namespace

TEST_CASE("D and H of power sums match the closed-form polar integrals") {
  std::mt19937_64 rng(23);
  const std::vector<oracle::Term> terms{{testing_support::random_c(rng, 2), 0.5},
                                        {testing_support::random_c(rng, 2), 1.5}};
  const auto u = testing_support::power_field(2, terms);
  const FrequencyProfile p = frequency_profile(u, Vec::Zero(2), kRadii, QuadLevel::at(5));
  for (std::size_t i = 0; i < kRadii.size(); ++i) {
    CHECK(p.D[i] == doctest::Approx(oracle::planar_D(terms, kRadii[i])).epsilon(1e-9));
    CHECK(p.H[i] == doctest::Approx(oracle::planar_H(terms, kRadii[i])).epsilon(1e-9));
  }
}

TEST_CASE("frequency of homogeneous cylindrical fields is k/2") {
  std::mt19937_64 rng(29);
  for (int n : {2, 3}) {
    for (int k = 1; k <= 4; ++k) {
      const auto u = cylindrical(n, testing_support::to_cvec(testing_support::random_c(rng, 2)), k);
      const FrequencyProfile p = frequency_profile(u, Vec::Zero(n), kRadii, QuadLevel::at(n == 2 ? 5 : 4));
      for (double N : p.N) CHECK(N == doctest::Approx(0.5 * k).epsilon(1e-8));
    }
  }
}

TEST_CASE("frequency of a nonzero constant pair is zero") {
  VectorPolynomial h(2, 2);
  h.add_constant(vec({1.0, -2.0}));
  const FrequencyProfile p = frequency_profile(single_valued(2, h), Vec::Zero(2), kRadii);
  for (double N : p.N) CHECK(std::abs(N) < 1e-14);
}

TEST_CASE("frequency of mismatched modes is beta/2 + omega^2/(2 beta)") {
  const double beta = 1.5, omega = 0.5;
  const auto u = angular_modes(2, {mode(beta, omega, {1.0, oracle::cplx(0.0, 1.0)})});
  const FrequencyProfile p = frequency_profile(u, Vec::Zero(2), kRadii, QuadLevel::at(5));
  for (double N : p.N) CHECK(N == doctest::Approx(beta / 2.0 + omega * omega / (2.0 * beta)).epsilon(1e-8));
}

TEST_CASE("frequency is monotone for a perturbed model solution") {
  const std::vector<oracle::Term> terms{{testing_support::isotropic_c(), 0.5}, {{{0.05, 0.0}, {0.0, 0.02}}, 2.5}};
  const auto u = testing_support::power_field(2, terms);
  std::vector<double> radii;
  for (int i = 1; i <= 20; ++i) radii.push_back(0.05 * i);
  const FrequencyProfile p = frequency_profile(u, Vec::Zero(2), radii, QuadLevel::at(5));
  for (std::size_t i = 0; i < radii.size(); ++i) CHECK(p.N[i] == doctest::Approx(oracle::planar_N(terms, radii[i])).epsilon(1e-9));
  const MonotonicityReport rep = check_monotonicity(p);
  CHECK(rep.pass());
  CHECK(rep.min_slope >= -1e-8);
  for (std::size_t i = 5; i < rep.slopes.size(); ++i) CHECK(rep.slopes[i] > 0.0);
}

TEST_CASE("homogeneous slopes vanish and the control violates monotonicity") {
  const auto phi = cylindrical(2, testing_support::to_cvec(testing_support::isotropic_c()), 1);
  const MonotonicityReport flat = check_monotonicity(frequency_profile(phi, Vec::Zero(2), kRadii, QuadLevel::at(5)));
  for (double s : flat.slopes) CHECK(std::abs(s) < 1e-8);

  std::vector<double> radii;
  for (int i = 1; i <= 10; ++i) radii.push_back(0.1 * i);
  const MonotonicityReport bad = check_monotonicity(frequency_profile(non_stationary_control(), Vec::Zero(2), radii, QuadLevel::at(5)));
  CHECK_FALSE(bad.pass());
}

TEST_CASE("derivative formula agrees with finite differences") {
  const std::vector<oracle::Term> terms{{testing_support::isotropic_c(), 0.5}, {{{0.2, 0.1}, {0.0, 0.3}}, 1.5}};
  const auto u = testing_support::power_field(2, terms);
  for (double rho : {0.3, 0.6, 0.9}) {
    const FrequencyDerivative d = frequency_derivative(u, Vec::Zero(2), rho, QuadLevel::at(5));
    CHECK(d.formula == doctest::Approx(d.fd_slope).epsilon(1e-5));
    const double h = 1e-5;
    const double oracle_slope = (oracle::planar_N(terms, rho + h) - oracle::planar_N(terms, rho - h)) / (2.0 * h);
    CHECK(d.formula == doctest::Approx(oracle_slope).epsilon(1e-5));
  }
}

TEST_CASE("doubling: equality when sigma = rho or u is homogeneous") {
  const auto phi = cylindrical(2, testing_support::to_cvec(testing_support::isotropic_c()), 3);
  const DoublingCheck same = doubling_check(phi, Vec::Zero(2), 0.5, 0.5, 1.5);
  CHECK(same.lower_ok);
  CHECK(same.upper_ok);
  for (double sigma : {0.1, 0.3, 0.7}) {
    const DoublingCheck d = doubling_check(phi, Vec::Zero(2), sigma, 1.0, 1.5, QuadLevel::at(5));
    CHECK(d.H_sigma / d.H_rho == doctest::Approx(std::pow(sigma, 3.0)).epsilon(1e-8));
    CHECK(std::abs(d.lower_margin) <= 1e-8 * d.L_sigma);
    CHECK(std::abs(d.upper_margin) <= 1e-8 * d.L_sigma);
  }
}

TEST_CASE("doubling: strict inequalities for a perturbed field") {
  const std::vector<oracle::Term> terms{{testing_support::isotropic_c(), 0.5}, {{{0.3, 0.0}, {0.0, 0.2}}, 1.5}};
  const auto u = testing_support::power_field(2, terms);
  for (double sigma : {0.2, 0.5}) {
    const DoublingCheck d = doubling_check(u, Vec::Zero(2), sigma, 1.0, 0.5, QuadLevel::at(5));
    CHECK(d.L_sigma == doctest::Approx(oracle::planar_ball_l2(terms, sigma) / (sigma * sigma)).epsilon(1e-9));
    CHECK(d.L_rho == doctest::Approx(oracle::planar_ball_l2(terms, 1.0)).epsilon(1e-9));
    CHECK(d.lower_ok);
    CHECK(d.upper_ok);
    CHECK(d.lower_margin > 1e-6 * d.L_sigma);
    CHECK(d.upper_margin > 1e-6 * d.L_sigma);
  }
}

TEST_CASE("stationarity residuals: harmonic pair at noise level") {
  VectorPolynomial h(2, 1);
  h.add_complex_power(make_cvec({Complex(1.0, 0.3)}), 2);
  h.add_complex_power(make_cvec({Complex(0.0, 0.5)}), 1);
  const auto u = single_valued(2, h);
  const StationarityResiduals r = stationarity_residuals(u, default_stationarity_input(2, Vec::Zero(2), 1.0), QuadLevel::at(6));
  // the bumps are only C^3, so the floor is set by quadrature error
  CHECK(r.squash < 1e-8);
  CHECK(r.squeeze < 1e-8);
  for (double x : r.radial) CHECK(x < 1e-10);
}

TEST_CASE("stationarity residuals of the model solution decay under refinement") {
  const auto phi = cylindrical(2, testing_support::to_cvec(testing_support::isotropic_c()), 1);
  const RefinementStudy s = stationarity_study(phi, default_stationarity_input(2, Vec::Zero(2), 1.0), 1, 4);
  CHECK(s.squash_order >= 2.0);
  CHECK(s.squeeze_order >= 2.0);
  CHECK(s.radial_order >= 2.0);
}

TEST_CASE("stationarity residuals of the control stay bounded away from zero") {
  const RefinementStudy s = stationarity_study(non_stationary_control(), default_stationarity_input(2, Vec::Zero(2), 1.0), 1, 4);
  for (double r : s.squeeze) CHECK(r > 1e-3);
  CHECK(s.squeeze.back() > 0.5 * s.squeeze.front());
}

TEST_CASE("weighted radial identity: homogeneous of degree alpha gives zeros") {
  const auto phi = cylindrical(2, testing_support::to_cvec(testing_support::isotropic_c()), 1);
  for (const auto& row : new_monotonicity_residual(phi, Vec::Zero(2), 0.5, {0.3, 0.6, 0.9})) {
    CHECK(std::abs(row.lhs) < 1e-9);
    CHECK(std::abs(row.rhs) < 1e-9);
  }
}

TEST_CASE("weighted radial identity: homogeneous of another degree matches the closed form") {
  // D = beta H, H(rho) = H(1) rho^{2 beta}: lhs = rhs = 2 (beta - alpha)^2 H(1) rho^{2 beta - 2 alpha - 1}
  const auto c = testing_support::isotropic_c();
  const auto u = cylindrical(2, testing_support::to_cvec(c), 3);
  const double alpha = 0.5, beta = 1.5, H1 = oracle::planar_H({{c, beta}}, 1.0);
  for (const auto& row : new_monotonicity_residual(u, Vec::Zero(2), alpha, {0.3, 0.6, 0.9})) {
    const double expect = 2.0 * (beta - alpha) * (beta - alpha) * H1 * std::pow(row.rho, 2.0 * beta - 2.0 * alpha - 1.0);
    CHECK(row.lhs == doctest::Approx(expect).epsilon(1e-7));
    CHECK(row.rhs == doctest::Approx(expect).epsilon(1e-7));
  }
}

TEST_CASE("weighted radial identity holds for a two-term power sum") {
  const std::vector<oracle::Term> terms{{testing_support::isotropic_c(), 0.5}, {{{0.1, 0.0}, {0.0, 0.1}}, 1.5}};
  const auto u = testing_support::power_field(2, terms);
  for (const auto& row : new_monotonicity_residual(u, Vec::Zero(2), 0.5, {0.25, 0.5, 0.75})) {
    CHECK(row.rhs > 0.0);
    CHECK(row.residual <= 1e-6);
  }
}

TEST_CASE("frequency at a point") {
  const auto phi = cylindrical(2, testing_support::to_cvec(testing_support::isotropic_c()), 1);
  CHECK(frequency_at_point(phi, Vec::Zero(2), 0.5).estimate == doctest::Approx(0.5).epsilon(1e-8));

  const PointFrequency off = frequency_at_point(phi, vec({0.5, 0.2}), 0.1);
  CHECK(std::abs(off.estimate) < 1e-3);

  const double t = 0.3;
  const auto u = branch_polynomial(2, make_cvec({1.0, Complex(0.0, 1.0)}), {Complex(t, 0.0), Complex(-t, 0.0)});
  const PointFrequency at = frequency_at_point(u, vec({t, 0.0}), 0.1);
  CHECK(at.estimate == doctest::Approx(0.5).epsilon(1e-4));
}
