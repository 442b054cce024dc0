#pragma once

// Discrete Dirichlet minimization of symmetric two-valued functions on the
// unit-radius (or any) disk in R^2, posed on the branched double cover.
//
// Unknowns live on the base polar grid r_i = R (i/N_r)^p, theta_j = 2 pi j / N_theta,
// one value per node for one sheet; the other sheet carries the negative.
// Each branch point emits a cut ray running radially outward to the boundary;
// angular edges crossing a cut connect v_a with -v_b. The discrete energy is
//   2 * sum_edges w_e |v_a - sigma_e v_b|^2
// with weights from the Dirichlet form written in (s, theta), r = R s^p.

#include "branchlab/sampled_field.hpp"

#include <vector>

namespace branchlab {

struct CoverGrid {
  int n_radial = 64;
  int n_theta = 64;
  double radius = 1.0;
  double grading = 2.0;

  PolarGrid polar() const;
};

struct BranchConfiguration {
  std::vector<Vec> points;  // at most two, strictly inside the disk
};

/// Boundary trace lifted to the cover: values at theta_k = 4 pi k / K, k < K.
struct BoundaryTable {
  std::vector<double> theta;
  std::vector<Vec> values;

  int codim() const { return values.empty() ? 0 : static_cast<int>(values.front().size()); }
  /// +1 when g(theta + 2 pi) = g(theta), -1 when g(theta + 2 pi) = -g(theta).
  int holonomy(double tol = 1e-8) const;
  /// Periodic cubic interpolation on [0, 4 pi).
  Vec eval(double theta) const;
};

/// Continuous lift of the symmetric part of u on the circle |x - center| = radius.
BoundaryTable boundary_from_field(const TwoValuedField& u, double radius, int samples);

class CoverField {
 public:
  CoverField(CoverGrid grid, BranchConfiguration config, int codim);

  /// Samples the symmetric part of u on the nodes with signs matching the cut system.
  static CoverField from_field(const TwoValuedField& u, const CoverGrid& grid, const BranchConfiguration& config);

  const CoverGrid& grid() const { return grid_; }
  const BranchConfiguration& config() const { return config_; }
  int codim() const { return m_; }
  /// False when a center branch point was dropped because the data has trivial holonomy.
  bool branch_active() const { return branch_active_; }
  bool center_fixed() const { return center_fixed_; }
  int iterations() const { return iterations_; }
  double residual() const { return residual_; }

  std::size_t node_count() const { return values_.size(); }
  std::size_t index(int i, int j) const;  // i >= 1
  const Vec& value(std::size_t node) const { return values_[node]; }
  Vec& value(std::size_t node) { return values_[node]; }
  /// Sign of the angular edge (i, j) -> (i, j + 1 mod N_theta).
  int angular_sign(int i, int j) const;
  /// Product of angular signs around ring i.
  int ring_holonomy(int i) const;

  /// Value on the cover at (r_i, theta) for theta = 2 pi j_cover / N_theta, j_cover < 2 N_theta,
  /// continued around ring i from j = 0.
  Vec cover_value(int i, int j_cover) const;
  /// max |value(r, theta + 2 pi) - holonomy * value(r, theta)| over the nodes.
  double anti_periodicity_defect() const;

  double energy() const;
  SampledField to_two_valued() const;

 private:
  friend CoverField solve_branched_laplace(const BoundaryTable&, const CoverGrid&, const BranchConfiguration&,
                                           double);
  void build_signs();

  CoverGrid grid_;
  BranchConfiguration config_;
  int m_;
  std::vector<Vec> values_;
  std::vector<signed char> angular_sign_;  // per ring node
  bool branch_active_ = true;
  bool center_fixed_ = false;
  int iterations_ = 0;
  double residual_ = 0.0;
};

/// Throws NotLiftable if the data holonomy does not match the cut system and
/// SolverFailure if CG misses the tolerance.
CoverField solve_branched_laplace(const BoundaryTable& boundary, const CoverGrid& grid,
                                  const BranchConfiguration& config, double tolerance = 1e-10);

struct BranchSearchOptions {
  double initial_step = 0.05;   // in units of the radius
  double min_step = 1e-3;
  int max_solves = 200;
  double min_separation = 0.02; // in units of the radius
};

struct BranchSearchResult {
  BranchConfiguration config;
  CoverField field;
  double energy = 0.0;
  std::vector<double> energy_trace;  // accepted energies, nonincreasing
  int solves = 0;
  bool degenerate = false;           // branch points annihilate or do not affect the energy
  double unbranched_energy = 0.0;    // NaN when the data is not liftable without branch points
};

BranchSearchResult optimize_branch_points(const BoundaryTable& boundary, const CoverGrid& grid,
                                          const BranchConfiguration& initial,
                                          const BranchSearchOptions& options = {});

}  // namespace branchlab
