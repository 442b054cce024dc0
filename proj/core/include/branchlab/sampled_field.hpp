#pragma once

// Two-valued fields stored on Cartesian or graded polar grids, with
// interpolation, serialization, rescaling and L2 distances.
//
// Stored pairs use a locally continuous ordering. Where no continuous ordering
// exists (around branch points) the grid carries per-edge swap flags: an edge
// flag set means the stored order of the far node is swapped relative to the
// continuation of the near node.

#include "branchlab/field.hpp"
#include "branchlab/quadrature.hpp"

#include <cstdint>
#include <iosfwd>
#include <variant>
#include <vector>

namespace branchlab {

/// Box lattice of `points`^n nodes with spacing 2 * half_width / (points - 1);
/// only nodes strictly inside the ball of radius domain_radius are stored.
struct CartesianGrid {
  int n = 2;
  Vec center;
  double half_width = 1.0;
  int points = 33;
  double domain_radius = 1.0;

  double spacing() const { return 2.0 * half_width / (points - 1); }
  std::size_t lattice_size() const;
};

/// Nodes (r_i, theta_j), r_i = radius * (i / n_radial)^grading, i = 1..n_radial,
/// theta_j = 2 pi j / n_theta, plus one center node.
struct PolarGrid {
  Vec center;
  double radius = 1.0;
  int n_radial = 32;
  int n_theta = 64;
  double grading = 2.0;

  double s(int i) const { return static_cast<double>(i) / n_radial; }
  double r(int i) const;
  double theta(int j) const;
  std::size_t node_count() const { return 1 + static_cast<std::size_t>(n_radial) * n_theta; }
  std::size_t index(int i, int j) const;  // i >= 1
};

using Grid = std::variant<CartesianGrid, PolarGrid>;

/// Edge flags. Cartesian: bit d is the edge to the +e_d neighbor.
/// Polar: bit 0 is the angular edge (i, j) -> (i, j + 1 mod n_theta),
/// bit 1 the radial edge (i - 1, j) -> (i, j) (center for i = 1).
enum : std::uint8_t { kFlipAngular = 1, kFlipRadial = 2 };

class SampledField : public TwoValuedField {
 public:
  SampledField(int m, Grid grid, std::vector<UnorderedPair> values, std::vector<std::uint8_t> flags, bool symmetric);

  /// Samples u at every node and orders pairs by pairing propagation.
  static SampledField sample(const TwoValuedField& u, const Grid& grid);

  int dim() const override { return n_; }
  int codim() const override { return m_; }
  UnorderedPair eval(const Vec& x) const override;
  Jet jet(const Vec& x) const override;
  Vec domain_center() const override;
  double domain_radius() const override;
  double resolution() const override;

  const Grid& grid() const { return grid_; }
  bool symmetric() const { return symmetric_; }
  std::size_t node_count() const { return values_.size(); }
  bool present(std::size_t node) const { return present_[node] != 0; }
  Vec node_position(std::size_t node) const;
  const UnorderedPair& value(std::size_t node) const { return values_[node]; }
  std::uint8_t flags(std::size_t node) const { return flags_[node]; }
  const std::vector<UnorderedPair>& values() const { return values_; }

  void write_csv(std::ostream& os) const;
  static SampledField read_csv(std::istream& is);
  bool identical(const SampledField& other) const;

 private:
  void build_presence();
  void order_by_propagation();
  void order_polar();
  void order_cartesian();
  Jet interpolate(const Vec& x, bool want_grad) const;
  Jet interpolate_cartesian(const CartesianGrid& g, const Vec& x, bool want_grad) const;
  Jet interpolate_polar(const PolarGrid& g, const Vec& x, bool want_grad) const;

  int n_;
  int m_;
  Grid grid_;
  std::vector<UnorderedPair> values_;
  std::vector<std::uint8_t> flags_;
  std::vector<std::uint8_t> present_;
  bool symmetric_;
};

/// X -> u(Y + rho X) / (rho^{-n/2} ||u||_{L2(B_rho(Y))}) as a lazy view.
std::shared_ptr<ScaledField> normalized_rescale(const FieldPtr& u, const Vec& Y, double rho,
                                                const QuadLevel& level = QuadLevel::at(5));

/// Default sampling grid on B_1(0) for rescaled fields.
Grid default_unit_grid(int n);

/// Normalized rescaling sampled onto `grid` (default_unit_grid when omitted).
SampledField rescale(const FieldPtr& u, const Vec& Y, double rho, const Grid* grid = nullptr,
                     const QuadLevel& level = QuadLevel::at(5));

/// Quadrature of the integral of G(u, v)^2 over B_radius(center).
double l2_distance_sq(const TwoValuedField& u, const TwoValuedField& v, const Vec& center, double radius,
                      const QuadLevel& level = QuadLevel::at(4));

struct ConvergenceStudy {
  std::vector<int> levels;
  std::vector<double> values;
  std::vector<double> differences;  // |value_l - value_{l-1}|
  double observed_order = 0.0;      // log2 ratio of successive differences
};

ConvergenceStudy l2_distance_sq_study(const TwoValuedField& u, const TwoValuedField& v, const Vec& center,
                                      double radius, int first_level, int last_level);

/// Lagrange weights (and derivative weights) of the 4 nodes at t, nodes at 0..3.
void cubic_lagrange(double t, double w[4], double dw[4]);

}  // namespace branchlab
