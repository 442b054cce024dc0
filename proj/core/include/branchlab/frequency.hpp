#pragma once

// Energy D, height H and frequency N = D / H about a point; the classical
// variational identities, monotonicity, doubling, and the weighted radial
// monotonicity identity.

#include "branchlab/field.hpp"
#include "branchlab/quadrature.hpp"

#include <iosfwd>
#include <vector>

namespace branchlab {

/// rho^{2-n} int_{B_rho} |Du|^2, rho^{1-n} int_{dB_rho} |u|^2 and their ratio.
struct FrequencyProfile {
  Vec center;
  std::vector<double> radii;
  std::vector<double> D;
  std::vector<double> H;
  std::vector<double> N;
  QuadLevel level;

  /// Central differences on the radius grid (one-sided at the ends).
  std::vector<double> dN_drho() const;
  void write_csv(std::ostream& os) const;
};

/// Unscaled integrals over the ball / sphere about frame.origin.
double dirichlet_integral(const TwoValuedField& u, const Frame& frame, double rho, const QuadLevel& level);
double sphere_l2(const TwoValuedField& u, const Frame& frame, double rho, const QuadLevel& level);
double ball_l2(const TwoValuedField& u, const Frame& frame, double rho, const QuadLevel& level);

/// Throws DegenerateHeight when H falls below 1e-14 of the profile's scale.
FrequencyProfile frequency_profile(const TwoValuedField& u, const Vec& Y, const std::vector<double>& radii,
                                   const QuadLevel& level = QuadLevel::at(4));

struct MonotonicityReport {
  std::vector<double> midpoints;   // (rho_i + rho_{i+1}) / 2
  std::vector<double> slopes;      // (N_{i+1} - N_i) / (rho_{i+1} - rho_i)
  std::vector<double> violations;  // midpoints with slope < -slack * max(1, |N|)
  double min_slope = 0.0;
  bool pass() const { return violations.empty(); }
};

MonotonicityReport check_monotonicity(const FrequencyProfile& profile, double slack = 1e-8);

/// The Cauchy-Schwarz form of N'(rho) built from three sphere integrals.
struct FrequencyDerivative {
  double formula = 0.0;     // 2 rho^{1-2n} / H^2 * (uu * RR - UR^2)
  double uu = 0.0;          // int |u|^2
  double rr = 0.0;          // int R^2 |D_R u|^2
  double ur = 0.0;          // int R u . D_R u
  double fd_slope = 0.0;    // central difference of N
};

FrequencyDerivative frequency_derivative(const TwoValuedField& u, const Vec& Y, double rho,
                                         const QuadLevel& level = QuadLevel::at(4), double h = 1e-4);

struct DoublingCheck {
  double sigma = 0.0, rho = 0.0;
  double N_rho = 0.0;        // N_{u,Y}(rho)
  double N_point = 0.0;      // frequency at Y used for the upper bound
  double H_sigma = 0.0, H_rho = 0.0;
  double L_sigma = 0.0, L_rho = 0.0;  // r^{-n} int_{B_r} |u|^2
  double lower_bound = 0.0;  // (sigma/rho)^{2 N_rho} L_rho
  double upper_bound = 0.0;  // (sigma/rho)^{2 N_point} L_rho
  double lower_margin = 0.0; // L_sigma - lower_bound
  double upper_margin = 0.0; // upper_bound - L_sigma
  bool lower_ok = false;
  bool upper_ok = false;
};

/// Integrated doubling inequalities; margins above -rel_tol * L_sigma pass.
DoublingCheck doubling_check(const TwoValuedField& u, const Vec& Y, double sigma, double rho, double N_point,
                             const QuadLevel& level = QuadLevel::at(4), double rel_tol = 1e-10);

/// Compactly supported test functions: b(X) = (1 - |X - c|^2 / s^2)^4 on B_s(c).
struct BumpFunction {
  Vec center;
  double radius = 0.5;

  double value(const Vec& x) const;
  Vec gradient(const Vec& x) const;
};

/// zeta^j = b(X) * direction_j (scalar tests use b alone).
struct TestVectorField {
  BumpFunction bump;
  Vec direction;
};

struct StationarityInput {
  Vec domain_center;
  double domain_radius = 1.0;  // integrals run over this ball
  std::vector<BumpFunction> scalar_tests;
  std::vector<TestVectorField> vector_tests;
  Vec radial_center;
  std::vector<double> radial_radii;
};

struct StationarityResiduals {
  double squash = 0.0;   // max |int |Du|^2 z + int u.D_i u D_i z|
  double squeeze = 0.0;  // max |int (1/2 |Du|^2 d_ij - D_i u.D_j u) D_i z^j|
  std::vector<double> radial;  // |int_B |Du|^2 - int_dB u.D_R u| per radius
  double squash_scale = 0.0;   // int |Du|^2 z for the first test, for context
};

StationarityResiduals stationarity_residuals(const TwoValuedField& u, const StationarityInput& input,
                                             const QuadLevel& level);

struct RefinementStudy {
  std::vector<int> levels;
  std::vector<double> squash, squeeze, radial;  // radial: max over radii
  double squash_order = 0.0;
  double squeeze_order = 0.0;
  double radial_order = 0.0;
};

/// Observed order: min over successive levels of log2(coarse / max(fine, floor)),
/// +inf when every level is already at the floor.
double observed_order(const std::vector<double>& residuals, double floor);

RefinementStudy stationarity_study(const TwoValuedField& u, const StationarityInput& input, int first_level,
                                   int last_level, double floor = 1e-13);

/// Default test set: off-axis bumps inside B_radius(center).
StationarityInput default_stationarity_input(int n, const Vec& center, double radius);

struct NewMonotonicityRow {
  double rho = 0.0;
  double lhs = 0.0;  // d/drho (rho^{-2a} (D - a H)), fourth-order central difference
  double rhs = 0.0;  // 2 rho^{2-n} int_{dB} |d(u / R^a)/dR|^2
  double residual = 0.0;
};

std::vector<NewMonotonicityRow> new_monotonicity_residual(const TwoValuedField& u, const Vec& Y, double alpha,
                                                          const std::vector<double>& radii,
                                                          const QuadLevel& level = QuadLevel::at(5),
                                                          double rel_step = 1e-3);

struct PointFrequency {
  double estimate = 0.0;
  double uncertainty = 0.0;
  bool monotone = true;        // sampled N nondecreasing within slack
  bool low_confidence = false;
  std::vector<double> radii;
  std::vector<double> N;
};

/// N on rho_max * 2^{-i}, i < count, extrapolated by Richardson steps in rho^2.
PointFrequency frequency_at_point(const TwoValuedField& u, const Vec& Y, double rho_max, int count = 6,
                                  const QuadLevel& level = QuadLevel::at(4), double slack = 1e-6);

/// Ratios of the integral estimates bounding radial and axial derivatives by the excess.
struct ExcessRatios {
  double radial_lhs = 0.0;  // int_{B_gamma} R^{2-n} |d(u/R^a)/dR|^2
  double axial_lhs = 0.0;   // int_{B_gamma} |D_y u|^2
  double excess = 0.0;      // int_{B_1} G(u, phi)^2
  double radial_ratio = 0.0;
  double axial_ratio = 0.0;
};

ExcessRatios excess_ratios(const TwoValuedField& u, const TwoValuedField& phi, double alpha, double gamma,
                           const QuadLevel& level = QuadLevel::at(4));

}  // namespace branchlab
