#pragma once

// Product quadrature on balls and spheres in R^n, n in {2, 3, 4}.
//
// Nodes are organised in rings: circles in the (x1, x2)-plane of a local
// frame, each carrying n_theta uniformly spaced angles. The polar axis of the
// spherical coordinates is the y-axis of the frame, so for balls centered on
// the branch axis the distance to the axis r = R sin(phi) is a coordinate and
// integrands of the form r^(2a-2) * trig(theta) stay smooth in every variable.
//
//   n = 2: (R, theta)
//   n = 3: (R, phi in (0, pi), theta),         y = R cos(phi)
//   n = 4: (R, phi in (0, pi/2), psi, theta),  y = R cos(phi) (cos psi, sin psi)
//
// Radial nodes are Gauss-Legendre in s with R = rho * s^p (p = grading).

#include "branchlab/types.hpp"

#include <functional>
#include <vector>

namespace branchlab {

std::vector<double> gauss_legendre_nodes(int count);    // on (-1, 1)
std::vector<double> gauss_legendre_weights(int count);  // matching weights

struct QuadLevel {
  int radial = 16;
  int polar = 16;
  int angular = 32;
  double grading = 2.0;

  /// Level L doubles every count of level L - 1; level 0 is deliberately coarse.
  static QuadLevel at(int level);
  QuadLevel refined() const;
};

/// global = origin + rotation * local
struct Frame {
  Vec origin;
  Mat rotation;

  static Frame identity(int n);
  static Frame at(const Vec& origin);
  Vec to_global(const Vec& local) const;
  Vec to_local(const Vec& global) const;
};

struct Ring {
  double R = 0.0;   // distance to the frame origin
  double r = 0.0;   // distance to the local axis
  Vec y;            // local axial coordinates (n - 2)
  double weight = 0.0;  // weight of each node on the ring
};

struct QuadPoint {
  Vec x;       // global position
  Vec local;   // frame coordinates
  double R = 0.0;
  double r = 0.0;
  double theta = 0.0;
  double weight = 0.0;
};

class QuadratureRule {
 public:
  QuadratureRule() = default;
  QuadratureRule(int n, Frame frame, std::vector<Ring> rings, int n_theta);

  int dim() const { return n_; }
  int n_theta() const { return n_theta_; }
  const Frame& frame() const { return frame_; }
  const std::vector<Ring>& rings() const { return rings_; }
  std::size_t size() const { return rings_.size() * static_cast<std::size_t>(n_theta_); }

  double theta(int j) const;
  QuadPoint point(std::size_t ring, int j) const;
  Vec local_point(std::size_t ring, double theta) const;

  /// Sum over all nodes of weight * f(point); deterministic reduction per ring.
  double integrate(const std::function<double(const QuadPoint&)>& f) const;
  /// Same, vector-valued with fixed length.
  Eigen::VectorXd integrate_vec(int length, const std::function<void(const QuadPoint&, Eigen::VectorXd&)>& f) const;
  /// Visits every node (parallel over rings); the visitor must not share state.
  void for_each_ring(const std::function<void(std::size_t)>& body) const;
  double total_weight() const;

 private:
  int n_ = 0;
  Frame frame_;
  std::vector<Ring> rings_;
  int n_theta_ = 0;
};

QuadratureRule ball_rule(int n, const Frame& frame, double rho, const QuadLevel& level);
QuadratureRule sphere_rule(int n, const Frame& frame, double rho, const QuadLevel& level);

/// |B_1| and |S^{n-1}| for n in {1, ..., 4}.
double unit_ball_volume(int n);
double unit_sphere_area(int n);

}  // namespace branchlab
