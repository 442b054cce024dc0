#pragma once

// Linear theory on the branched cover of a cylindrical profile: the
// 4 pi-periodic eigenbasis, angular Fourier coefficients, projection onto the
// finite span L, the small-r boundary term for alpha = 1/2, and the per-scale
// radial-derivative decay check.
//
// Cover coordinates (r, theta, y) live in the profile frame with theta in
// [0, 4 pi); the sheet at theta is the profile value cover_value(r, theta).

#include "branchlab/field.hpp"
#include "branchlab/profiles.hpp"
#include "branchlab/quadrature.hpp"

#include <functional>
#include <string>
#include <vector>

namespace branchlab {

/// w(r, theta, y) on graph phi, m-vector valued.
using CoverFunction = std::function<Vec(double r, double theta, const Vec& y)>;

/// Scalar modes 1, sqrt2 cos(j theta / 2), sqrt2 sin(j theta / 2), orthonormal for d theta / (4 pi);
/// eigenvalue (j / 2)^2. Index 0 is the constant, then (cos, sin) pairs for j = 1, 2, ...
struct CoverFourierBasis {
  int max_frequency = 16;  // largest j

  int size() const { return 2 * max_frequency + 1; }
  static int frequency(int l) { return (l + 1) / 2; }
  static bool is_sine(int l) { return l > 0 && l % 2 == 0; }
  static double eigenvalue(int l);
  static double value(int l, double theta);
  static double second_derivative(int l, double theta);
  /// Smallest index with eigenvalue (alpha - 1)^2.
  static int l0(double alpha);

  /// max over the sample angles of |phi'' + lambda phi|.
  double eigen_residual(int l, int samples = 64) const;
  /// Gram matrix for d theta / (4 pi) by trapezoid quadrature with `samples` nodes on [0, 4 pi).
  Eigen::MatrixXd orthonormality_matrix(int samples = 256) const;
};

struct FourierCoefficients {
  double r = 0.0;
  Vec y;
  CoverFourierBasis basis;
  Eigen::MatrixXd w;        // m x basis.size(); column l is w_l(r, y)
  double angular_norm_sq = 0.0;   // (1 / 4 pi) int_0^{4 pi} |w|^2
  double parseval_residual = 0.0; // |angular_norm_sq - sum |w_l|^2|
};

/// w_l(r, y) = (1 / 4 pi) int_0^{4 pi} w phi_l d theta with `samples` trapezoid nodes.
FourierCoefficients fourier_coefficients(const CoverFunction& w, int m, double r, const Vec& y, int samples = 256);

/// D_1 phi and D_2 phi on the cover.
Vec profile_derivative(const CylindricalProfile& phi, int i, double r, double theta);

/// Basis of L: e_q r^a cos(a theta), e_q r^a sin(a theta) for each component q, then
/// D_1 phi y_j, D_2 phi y_j for j = 1, ..., n - 2.
int span_dimension(int n, int m);
Vec span_element(const CylindricalProfile& phi, int index, double r, double theta, const Vec& y);

struct Projection {
  double rho = 0.0;
  Eigen::VectorXd coefficients;   // of psi in the span basis
  Eigen::MatrixXd gram;
  double gram_condition = 0.0;
  double w_norm_sq = 0.0;         // int_{graph phi | B_rho} |w|^2
  double psi_norm_sq = 0.0;
  double remainder_norm_sq = 0.0; // computed directly from w - psi
  double pythagoras_defect = 0.0; // |w - psi - remainder| / w
  double orthogonality = 0.0;     // max_i |<w_rho, L_i>| / (|w| |L_i|)

  Vec psi(const CylindricalProfile& phi, double r, double theta, const Vec& y) const;
};

/// Orthogonal projection onto L in L^2 over graph phi restricted to B_rho (both sheets).
Projection project_L(const CoverFunction& w, const CylindricalProfile& phi, double rho,
                     const QuadLevel& level = QuadLevel::at(4));

/// psi and w - psi as cover functions.
CoverFunction projection_part(const Projection& p, const CylindricalProfile& phi);
CoverFunction remainder_part(const CoverFunction& w, const Projection& p, const CylindricalProfile& phi);

/// int over graph phi restricted to B_rho of |w|^2 (both sheets).
double cover_norm_sq(const CoverFunction& w, const CylindricalProfile& phi, double rho,
                     const QuadLevel& level = QuadLevel::at(4));

/// Cover function (u - phi) / scale with the nearest entry of u paired to each sheet of phi.
CoverFunction cover_difference(FieldPtr u, const CylindricalProfile& phi, double scale = 1.0);

struct BoundaryTermEstimate {
  std::vector<double> radii;
  std::vector<double> values;   // d^2/dr dy_p of int_{S^1} r w . D_i phi
  double limit = 0.0;
  double uncertainty = 0.0;
  bool low_confidence = false;
};

/// Small-r limit of d^2/(dr dy_p) int_{S^1} r w . D_i phi d theta at y = y0 (alpha = 1/2, n >= 3).
BoundaryTermEstimate half_case_boundary_term(const CoverFunction& w, const CylindricalProfile& phi, int p, int i,
                                             const Vec& y0, double r_max = 0.2, int count = 8,
                                             double resolution = 0.0);

struct DecayScale {
  double rho = 0.0;
  double radial_inner = 0.0;   // int_{B_{rho/4}} R^{2-n} |d_R(w / R^a)|^2
  double radial_outer = 0.0;   // int_{B_rho} R^{2-n} |d_R(w / R^a)|^2
  double ratio = 0.0;          // inner / outer
  double remainder_scaled = 0.0;  // rho^{-n-2a} int_{B_rho} |w_rho|^2
  double lambda_sq = 0.0;      // |lambda_1|^2 + |lambda_2|^2 at z = 0, scaled per rho
  double concentration = 0.0;  // weighted lambda-corrected integral over B_{rho/4}
  double beta1_needed = 0.0;
  double beta2_needed = 0.0;
};

struct DecayCheckOptions {
  double theta = 0.125;
  std::vector<double> scales;  // empty: 4^{-j} for 4^{-j} >= theta
  double beta1 = 0.0;          // <= 0: observed maximum plus 50%
  double beta2 = 0.0;
  double sigma = 0.5;
  QuadLevel level = QuadLevel::at(3);
};

struct DecayCheckReport {
  std::vector<DecayScale> scales;
  double beta1 = 0.0;
  double beta2 = 0.0;
  bool hypotheses_hold = true;
  std::string violation;
  double gamma = 0.0;           // max per-scale ratio
  double two_mu = 0.0;          // -log(gamma) / log 4
  double lhs = 0.0;             // theta^{-n-2a} int_{B_theta} |w_theta|^2
  double rhs_base = 0.0;        // int_{B_1} |w_1|^2
  double decay_ratio = 0.0;     // lhs / rhs_base
  bool evaluated = false;
};

DecayCheckReport radial_decay_check(const CoverFunction& w, const CylindricalProfile& phi,
                                    const DecayCheckOptions& opt = {});

}  // namespace branchlab
