#include "branchlab/polynomial.hpp"

#include <cmath>
#include <functional>
#include <map>

namespace branchlab {

namespace {

double ipow(double x, int k) {
  double r = 1.0;
  for (int i = 0; i < k; ++i) r *= x;
  return r;
}

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

void enumerate_exponents(int n, int max_degree, std::vector<std::array<int, kMaxDim>>& out) {
  std::array<int, kMaxDim> e{};
  std::function<void(int, int)> rec = [&](int var, int left) {
    if (var == n) {
      out.push_back(e);
      return;
    }
    for (int p = 0; p <= left; ++p) {
      e[var] = p;
      rec(var + 1, left - p);
    }
    e[var] = 0;
  };
  rec(0, max_degree);
}

}  // namespace

void VectorPolynomial::add(const std::array<int, kMaxDim>& exponent, const Vec& coeff) {
  if (coeff.size() != m_) throw InvalidInput("polynomial coefficient has wrong dimension");
  for (auto& t : terms_) {
    if (t.exponent == exponent) {
      t.coeff += coeff;
      return;
    }
  }
  terms_.push_back({exponent, coeff});
}

void VectorPolynomial::add_complex_power(const CVec& a, int j) {
  if (a.size() != m_) throw InvalidInput("complex coefficient has wrong dimension");
  if (n_ < 2) throw InvalidInput("complex power needs n >= 2");
  // Re(a (x1 + i x2)^j) = sum_l binom(j,l) x1^(j-l) x2^l Re(a i^l)
  for (int l = 0; l <= j; ++l) {
    Complex il = std::pow(Complex(0.0, 1.0), l);
    Vec c(m_);
    for (int k = 0; k < m_; ++k) c[k] = binomial(j, l) * std::real(a[k] * il);
    if (c.lpNorm<Eigen::Infinity>() == 0.0) continue;
    std::array<int, kMaxDim> e{};
    e[0] = j - l;
    e[1] = l;
    add(e, c);
  }
}

void VectorPolynomial::add_constant(const Vec& b) { add(std::array<int, kMaxDim>{}, b); }

void VectorPolynomial::add_linear_y(const Mat& L) {
  if (L.rows() != m_ || L.cols() != n_ - 2) throw InvalidInput("linear y-part has wrong shape");
  for (int j = 0; j < n_ - 2; ++j) {
    std::array<int, kMaxDim> e{};
    e[2 + j] = 1;
    add(e, L.col(j));
  }
}

Vec VectorPolynomial::eval(const Vec& x) const {
  Vec out = Vec::Zero(m_);
  for (const auto& t : terms_) {
    double v = 1.0;
    for (int i = 0; i < n_; ++i) v *= ipow(x[i], t.exponent[i]);
    out += v * t.coeff;
  }
  return out;
}

Mat VectorPolynomial::gradient(const Vec& x) const {
  Mat g = Mat::Zero(m_, n_);
  for (const auto& t : terms_) {
    for (int d = 0; d < n_; ++d) {
      if (t.exponent[d] == 0) continue;
      double v = t.exponent[d];
      for (int i = 0; i < n_; ++i) v *= ipow(x[i], t.exponent[i] - (i == d ? 1 : 0));
      g.col(d) += v * t.coeff;
    }
  }
  return g;
}

int VectorPolynomial::degree() const {
  int d = 0;
  for (const auto& t : terms_) {
    int s = 0;
    for (int i = 0; i < n_; ++i) s += t.exponent[i];
    d = std::max(d, s);
  }
  return d;
}

VectorPolynomial VectorPolynomial::laplacian() const {
  VectorPolynomial out(n_, m_);
  for (const auto& t : terms_) {
    for (int d = 0; d < n_; ++d) {
      int p = t.exponent[d];
      if (p < 2) continue;
      auto e = t.exponent;
      e[d] -= 2;
      out.add(e, static_cast<double>(p * (p - 1)) * t.coeff);
    }
  }
  return out;
}

double VectorPolynomial::max_abs_coeff() const {
  double v = 0.0;
  for (const auto& t : terms_) v = std::max(v, t.coeff.lpNorm<Eigen::Infinity>());
  return v;
}

std::vector<VectorPolynomial> harmonic_basis(int n, int degree) {
  if (n < 1 || n > kMaxDim) throw InvalidInput("harmonic_basis: bad dimension");
  std::vector<std::array<int, kMaxDim>> mono, target;
  enumerate_exponents(n, degree, mono);
  enumerate_exponents(n, std::max(0, degree - 2), target);
  std::map<std::array<int, kMaxDim>, int> row_of;
  for (std::size_t i = 0; i < target.size(); ++i) row_of[target[i]] = static_cast<int>(i);

  // Laplacian as a matrix from monomial coefficients to target coefficients.
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(static_cast<int>(target.size()), static_cast<int>(mono.size()));
  for (std::size_t c = 0; c < mono.size(); ++c) {
    for (int d = 0; d < n; ++d) {
      int p = mono[c][d];
      if (p < 2) continue;
      auto e = mono[c];
      e[d] -= 2;
      L(row_of.at(e), static_cast<int>(c)) += p * (p - 1);
    }
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(L);
  Eigen::MatrixXd kernel = lu.kernel();
  if (degree < 2) kernel = Eigen::MatrixXd::Identity(static_cast<int>(mono.size()), static_cast<int>(mono.size()));

  std::vector<VectorPolynomial> basis;
  for (int k = 0; k < kernel.cols(); ++k) {
    VectorPolynomial p(n, 1);
    for (std::size_t c = 0; c < mono.size(); ++c) {
      double v = kernel(static_cast<int>(c), k);
      if (std::abs(v) > 1e-13) {
        Vec coeff(1);
        coeff[0] = v;
        p.add(mono[c], coeff);
      }
    }
    basis.push_back(std::move(p));
  }
  return basis;
}

}  // namespace branchlab
