#pragma once

// Branch-set detection, gap probing, the excess-decay iteration, tangent
// extraction with exponent tables, translated-frequency checks and
// stratification by translation invariance of blow-ups.

#include "branchlab/field.hpp"
#include "branchlab/frequency.hpp"
#include "branchlab/profiles.hpp"

#include <optional>
#include <string>
#include <vector>

namespace branchlab {

/// Symmetric part {±(u1 - u2) / 2} of a field.
class SymmetricPart : public TwoValuedField {
 public:
  explicit SymmetricPart(FieldPtr base) : base_(std::move(base)) {}
  int dim() const override { return base_->dim(); }
  int codim() const override { return base_->codim(); }
  UnorderedPair eval(const Vec& x) const override;
  Jet jet(const Vec& x) const override;
  Vec domain_center() const override { return base_->domain_center(); }
  double domain_radius() const override { return base_->domain_radius(); }
  double resolution() const override { return base_->resolution(); }

 private:
  FieldPtr base_;
};

/// Holonomy of the continuous lift of u_s around a closed polygon: +1, -1, or 0 when
/// |u_s| is too small on the loop to decide.
int loop_holonomy(const TwoValuedField& u, const std::vector<Vec>& loop, int samples_per_edge = 16);

enum class CandidateKind { branch, touching };

struct BranchCandidate {
  Vec x;
  CandidateKind kind = CandidateKind::branch;
  double frequency = 0.0;
  double uncertainty = 0.0;
  bool low_confidence = false;
  bool branch_evidence = false;  // odd holonomy around small loops
  double symmetric_norm = 0.0;   // |u_s(x)|
  int stratum = -1;              // set by stratify
  bool ambiguous = false;
};

struct DetectOptions {
  Vec center;              // search box center (empty: origin)
  double half_width = 0.9; // in x1, x2
  double axial_half_width = 0.9;  // in x3 (n = 3)
  int cells = 32;          // per in-plane side
  int slices = 0;          // n = 3 slices along x3; 0 picks from cells
  int refine_depth = 30;
  double frequency_radius = 0.25;   // upper cap for frequency estimates
  QuadLevel frequency_level = QuadLevel::at(3);
  double touch_tolerance = 0.0;     // 0 picks from resolution and scale
  double min_frequency = 0.5;
  double frequency_tolerance = 0.02;
  bool estimate_frequency = true;
};

struct SingularReport {
  std::vector<BranchCandidate> candidates;
  double cell_size = 0.0;
  double slice_spacing = 0.0;
  bool isolated = true;          // branch candidates pairwise farther than two cells (n = 2)
  int discarded_low_frequency = 0;
};

/// Cells of an in-plane grid with odd holonomy give branch candidates (refined by
/// bisection); nodes with |u_s| and |Du_s| below the tolerance give touching candidates.
/// For n = 3 the search runs on slices x3 = const.
SingularReport detect_branch_set(const FieldPtr& u, const DetectOptions& opt = {});

/// Axis point y0 in B_{1/2}^{n-2} whose delta0-ball holds no candidate of frequency
/// >= alpha - 3 * uncertainty; n = 2 tests y0 = 0 only.
std::optional<Vec> gap_probe(const SingularReport& report, double delta0, double alpha, int n);

struct DecayStepResult {
  CylindricalProfile profile;
  double excess_before = 0.0;  // int_{B_1} G(u, phi_prev)^2
  double excess_after = 0.0;   // theta^{-n-2a} int_{B_theta} G(u, phi~)^2
  double ratio = 0.0;
};

/// Fits phi~ to theta^{-a} u(theta X) on B_1 and returns the normalized excess ratio.
DecayStepResult decay_step(const FieldPtr& u, const CylindricalProfile& phi_prev, double theta,
                           const FitOptions& fit = {});

enum class StepOutcome { decay, gap, fit_failure, truncated };
std::string to_string(StepOutcome outcome);

struct DecayRecord {
  explicit DecayRecord(CylindricalProfile p) : profile(std::move(p)) {}

  int j = 0;
  double scale = 1.0;                    // theta^j
  CylindricalProfile profile;
  double excess = 0.0;                   // E_j^2 at the rescaled level
  double ratio = 0.0;                    // E_j^2 / E_{j-1}^2
  double drift = 0.0;                    // int_{B_1} G(phi_j, phi_{j-1})^2
  StepOutcome outcome = StepOutcome::decay;
  std::optional<Vec> gap_witness;
};

struct DecayOptions {
  double theta = 0.125;
  int j_max = 4;
  double delta0 = 0.0;         // 0 picks theta / 2
  double eps0 = 0.0;           // relative excess threshold; 0 picks 0.05
  bool probe_gaps = true;
  DetectOptions detect;        // used by the gap probe
  FitOptions fit;
};

struct DecayRun {
  Vec Z;
  double theta = 0.0;
  std::vector<DecayRecord> steps;
  CylindricalProfile limit;
  double two_mu = 0.0;         // slope of log E_j^2 against log theta^j
  double constant = 0.0;       // fitted E_j^2 <= C theta^{2 mu j}
  bool pure_decay = false;
  bool truncated = false;
  std::string stop_reason;
};

/// Per-scale loop: gap probe, then decay step, on u(Z + theta^j X) scaled by theta^{-j a}.
DecayRun iterate(const FieldPtr& u, const Vec& Z, const CylindricalProfile& guess, const DecayOptions& opt = {});

struct ErrorTableRow {
  double sigma = 0.0;
  double l2 = 0.0;    // sigma^{-n} int_{B_sigma} |eps|^2
  double sup = 0.0;   // sup_{B_sigma} |eps|^2 on the quadrature nodes
};

struct TangentResult {
  int k = 0;
  CVec c;
  Mat Q;
  double gamma = 0.0;          // l2 slope minus k
  double constant = 0.0;       // C with l2 <= C sigma^{k + gamma}
  double l2_slope = 0.0;
  double sup_slope = 0.0;
  bool exact = false;          // eps vanishes to roundoff on every scale
  bool branch_point = true;    // c != 0
  std::vector<ErrorTableRow> table;
  double average_residual = 0.0;  // L2 misfit of the harmonic average fit on B_1
};

struct TangentOptions {
  int scales = 9;              // sigma = 2^{-i}, i = 0 .. scales - 1
  int average_degree = 4;
  QuadLevel level = QuadLevel::at(4);
};

TangentResult tangent_expansion(const FieldPtr& u, const Vec& Z, const DecayRun& run,
                                const TangentOptions& opt = {});

/// Least-squares slope over the middle two-thirds of (x, y) pairs.
double middle_slope(const std::vector<double>& x, const std::vector<double>& y, double* intercept = nullptr);

struct TranslatedFrequencyReport {
  std::vector<double> radii;
  std::vector<double> N;
  double max_excess = 0.0;     // max (N - alpha)
  double min_excess = 0.0;
  double bound = 0.0;          // eps^2
  bool within_bound = false;   // max_excess < eps^2
  bool nondecreasing = false;
};

/// N_{u, X1}(rho) for rho in [rho_min, R - |X1| - 1] on a field defined on B_R(0).
TranslatedFrequencyReport translated_frequency_check(const TwoValuedField& u, const Vec& X1, double alpha,
                                                     double eps, double domain_radius, int count = 12,
                                                     double rho_min = 0.1, const QuadLevel& level = QuadLevel::at(4));

struct StratifyOptions {
  double blowup_radius = 1e-3;
  double probe_distance = 0.5;   // in blow-up coordinates
  double tolerance = 1e-3;
  QuadLevel level = QuadLevel::at(3);
};

/// Labels each branch candidate by the number of coordinate directions along which its
/// blow-up is translation invariant; mixed evidence along a direction marks it ambiguous.
SingularReport stratify(const FieldPtr& u, SingularReport report, const StratifyOptions& opt = {});

}  // namespace branchlab
