#pragma once

// Cylindrical profiles composed with rotations from the skew space S, excess,
// least-squares fits of c and the rotation, the coarse graphical
// decomposition over graph phi, and the weighted excess estimates.

#include "branchlab/field.hpp"
#include "branchlab/quadrature.hpp"

#include <string>
#include <vector>

namespace branchlab {

/// Free entries of A in S: a_{i j} for i in {0, 1}, j in {2, ..., n-1}
/// (zero-based), A skew; 2 (n - 2) parameters.
int skew_parameter_count(int n);
Mat skew_from_parameters(int n, const Eigen::VectorXd& p);
Eigen::VectorXd skew_parameters(const Mat& A);
bool in_skew_space(const Mat& A, double tol = 0.0);

/// X -> {± Re(c ((Q (X - Z))_1 + i (Q (X - Z))_2)^{k/2})}, Q = e^A.
class CylindricalProfile : public TwoValuedField {
 public:
  CylindricalProfile(int n, CVec c, int k, Mat A = Mat(), Vec Z = Vec());

  int dim() const override { return n_; }
  int codim() const override { return static_cast<int>(c_.size()); }
  UnorderedPair eval(const Vec& x) const override;
  Jet jet(const Vec& x) const override;

  const CVec& c() const { return c_; }
  int k() const { return k_; }
  double alpha() const { return 0.5 * k_; }
  const Mat& A() const { return A_; }
  const Mat& Q() const { return Q_; }
  const Vec& center() const { return Z_; }

  /// One fixed-branch selection Re(c z^{k/2}) and its derivative.
  Vec selection(const Vec& x, Mat* grad = nullptr) const;
  /// Value on the cover over the profile frame: Re(c r^a e^{i a theta}), theta in [0, 4 pi).
  Vec cover_value(double r, double theta) const;
  /// Quadrature frame with origin Z and local axis along the profile axis.
  Frame frame() const;

  CylindricalProfile with_c(const CVec& c) const { return {n_, c, k_, A_, Z_}; }
  CylindricalProfile with_A(const Mat& A) const { return {n_, c_, k_, A, Z_}; }
  CylindricalProfile with_center(const Vec& Z) const { return {n_, c_, k_, A_, Z}; }

 private:
  int n_;
  CVec c_;
  int k_;
  Mat A_;
  Mat Q_;
  Vec Z_;
};

/// int_{B_radius(center)} G(u, phi)^2.
double excess(const TwoValuedField& u, const TwoValuedField& phi, const Vec& center, double radius,
              const QuadLevel& level = QuadLevel::at(4));

struct FitOptions {
  double radius = 1.0;       // fit ball B_radius(Z) in the profile frame
  double tube = 0.0;         // rings with r <= tube are ignored
  int quad_level = -1;       // -1 selects default_fit_level(n)
  double rotation_bound = 0.5;  // |A|_F <= bound
  int max_gauss_newton = 40;
  int max_alternations = 8;
};

/// Quadrature level used by the fits when the caller does not choose one.
QuadLevel default_fit_level(int n);

struct FitCResult {
  CVec c;
  double residual = 0.0;   // least-squares residual integral on the cover
  double condition = 0.0;  // of the 2x2 normal matrix
  int rings_used = 0;
  int rings_skipped = 0;   // lift inconsistent with the parity of k
};

/// Least squares for c with k, A, Z fixed; `guess` orients each ring's lift.
FitCResult fit_c(const TwoValuedField& u, const CylindricalProfile& guess, const FitOptions& opt);

struct FitRotationResult {
  Mat A;
  double objective = 0.0;
  double initial_objective = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> trace;  // objective per accepted step
};

FitRotationResult fit_rotation(const TwoValuedField& u, const CylindricalProfile& phi, const FitOptions& opt);

struct FitProfileResult {
  CylindricalProfile profile;
  double initial_excess = 0.0;
  double excess = 0.0;
  int alternations = 0;
  bool rotation_converged = true;
};

/// Alternates fit_c and fit_rotation starting from `guess` (c must be nonzero).
FitProfileResult fit_profile(const TwoValuedField& u, const CylindricalProfile& guess, const FitOptions& opt);

struct GraphGrid {
  int n_radial = 24;
  int n_theta = 32;
  int n_axial = 9;   // n = 3 only
};

struct GraphNode {
  Vec x;               // global position
  double r = 0.0;
  UnorderedPair v_hat; // {u_a - phi_1, u_b + phi_1}
  Mat dv1, dv2;        // derivatives of the two entries
  bool in_U = false;
};

struct GraphRepresentation {
  double tau = 0.0;
  double gamma = 0.0;
  double beta = 0.0;
  GraphGrid grid;
  std::vector<GraphNode> nodes;       // circles stored contiguously, n_theta nodes each
  std::vector<double> circle_r;       // per circle
  std::vector<Vec> circle_y;          // per circle
  std::vector<char> circle_in_U;      // per circle
  double sup_v = 0.0;                 // sup_U r^{-a} |v_hat|
  double sup_dv = 0.0;                // sup_U r^{1-a} |D v_hat|
  double reconstruction_error = 0.0;  // sup_U G(u, {phi_1 + v_a, -phi_1 + v_b})
  double graph_integral = 0.0;        // int_U (|v_hat|^2 + r^2 |D v_hat|^2)
  double complement_integral = 0.0;   // int_{B_gamma \ U} (|u|^2 + r^2 |Du|^2)
  double excess = 0.0;                // int_{B_1} G(u, phi)^2
  double integral_ratio = 0.0;        // (graph + complement) / excess
  bool symmetric_U = true;            // U is a union of whole circles
};

/// Throws DecompositionFailure for a circle with r > tau that cannot be paired.
GraphRepresentation graphical_decompose(const TwoValuedField& u, const CylindricalProfile& phi, double tau,
                                        double gamma, double beta = 0.5, const GraphGrid& grid = {});

struct CorollaryRow {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;
  std::string params;
};

struct CorollaryParams {
  double gamma = 0.5;
  double sigma = 0.5;
  double delta = 0.05;
  Vec Z;  // high-frequency point for the translated excess; empty means the origin
  QuadLevel level = QuadLevel::at(5);
};

/// Weighted excess, translated excess, and the r_delta-weighted excess, each with its ratio to int_{B_1} G^2.
std::vector<CorollaryRow> corollary_checks(const TwoValuedField& u, const CylindricalProfile& phi,
                                           const CorollaryParams& params);

}  // namespace branchlab
