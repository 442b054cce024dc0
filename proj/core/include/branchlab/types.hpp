#pragma once

// Small fixed-capacity vector/matrix aliases and the library error types.

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <string>

namespace branchlab {

inline constexpr int kMaxDim = 4;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;
using Complex = std::complex<double>;
using CVec = Eigen::Matrix<Complex, Eigen::Dynamic, 1, 0, kMaxDim, 1>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dimension mismatch, out-of-domain request, malformed parameters.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// Gradient requested where the field is not differentiable.
class SingularEvaluation : public Error {
 public:
  using Error::Error;
};

/// Rescaling of a field with vanishing L2 norm.
class DegenerateRescale : public Error {
 public:
  using Error::Error;
};

/// Height H(rho) below the numerical floor.
class DegenerateHeight : public Error {
 public:
  double radius;
  DegenerateHeight(const std::string& msg, double rho) : Error(msg), radius(rho) {}
};

/// Singular or badly conditioned normal equations.
class IllConditioned : public Error {
 public:
  using Error::Error;
};

/// Iterative solver did not reach its tolerance.
class SolverFailure : public Error {
 public:
  double residual;
  SolverFailure(const std::string& msg, double res) : Error(msg), residual(res) {}
};

/// Boundary data incompatible with the requested branch topology.
class NotLiftable : public Error {
 public:
  using Error::Error;
};

/// Pairing propagation failed around a loop.
class DecompositionFailure : public Error {
 public:
  double loop_r;
  Vec loop_y;
  DecompositionFailure(const std::string& msg, double r, Vec y)
      : Error(msg), loop_r(r), loop_y(std::move(y)) {}
};

inline Vec zeros(int n) { return Vec::Zero(n); }

}  // namespace branchlab
