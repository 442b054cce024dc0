#pragma once

// Vector-valued multivariate polynomials in n <= 4 variables. Used for the
// single-valued average of analytic fields and for harmonic fits.

#include "branchlab/types.hpp"

#include <array>
#include <vector>

namespace branchlab {

struct Monomial {
  std::array<int, kMaxDim> exponent{};
  Vec coeff;  // m-vector
};

class VectorPolynomial {
 public:
  VectorPolynomial() = default;
  VectorPolynomial(int n, int m) : n_(n), m_(m) {}

  int dim() const { return n_; }
  int codim() const { return m_; }
  const std::vector<Monomial>& terms() const { return terms_; }
  bool empty() const { return terms_.empty(); }

  /// Adds coeff * x^exponent, merging equal exponents.
  void add(const std::array<int, kMaxDim>& exponent, const Vec& coeff);
  /// Adds Re(a * (x1 + i x2)^j) for a complex m-vector a.
  void add_complex_power(const CVec& a, int j);
  void add_constant(const Vec& b);
  /// Adds L * y, y = (x3, ..., xn), L is m x (n-2).
  void add_linear_y(const Mat& L);

  Vec eval(const Vec& x) const;
  Mat gradient(const Vec& x) const;  // m x n
  int degree() const;
  VectorPolynomial laplacian() const;
  double max_abs_coeff() const;

 private:
  int n_ = 0;
  int m_ = 0;
  std::vector<Monomial> terms_;
};

/// Basis of scalar harmonic polynomials of degree <= d in n variables
/// (kernel of the Laplacian on the monomial space), each as a 1-valued polynomial.
std::vector<VectorPolynomial> harmonic_basis(int n, int degree);

}  // namespace branchlab
