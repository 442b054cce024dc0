#include "branchlab/spectral.hpp"

#include "branchlab/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace branchlab {

namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;
const double kSqrt2 = std::sqrt(2.0);

// Sum over the cover nodes of every ring: theta_j = 2 pi j / nt, j < 2 nt.
template <class F>
Eigen::VectorXd cover_integrate(const QuadratureRule& rule, int length, F&& f) {
  const std::size_t nr = rule.rings().size();
  const int nt = rule.n_theta();
  std::vector<Eigen::VectorXd> part(nr, Eigen::VectorXd::Zero(length));
  parallel_for(nr, [&](std::size_t i) {
    const Ring& rg = rule.rings()[i];
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(length);
    for (int j = 0; j < 2 * nt; ++j) f(rg, 2.0 * kPi * j / nt, rg.weight, acc);
    part[i] = acc;
  });
  Eigen::VectorXd tot = Eigen::VectorXd::Zero(length);
  for (const auto& p : part) tot += p;
  return tot;
}

QuadratureRule standard_ball(int n, double rho, const QuadLevel& level) {
  return ball_rule(n, Frame::identity(n), rho, level);
}

// d/dR (w / R^a) at the cover point, via scaling t -> (t r, theta, t y).
Vec radial_derivative(const CoverFunction& w, double a, double R, double r, double theta, const Vec& y) {
  const double h = 1e-3;
  auto g = [&](double t) -> Vec { return w(t * r, theta, Vec(t * y)) / std::pow(t * R, a); };
  const Vec d = (g(1.0 - 2.0 * h) - 8.0 * g(1.0 - h) + 8.0 * g(1.0 + h) - g(1.0 + 2.0 * h)) / (12.0 * h);
  return d / R;
}

}  // namespace

double CoverFourierBasis::eigenvalue(int l) {
  const double f = 0.5 * frequency(l);
  return f * f;
}

double CoverFourierBasis::value(int l, double theta) {
  if (l == 0) return 1.0;
  const double arg = 0.5 * frequency(l) * theta;
  return kSqrt2 * (is_sine(l) ? std::sin(arg) : std::cos(arg));
}

double CoverFourierBasis::second_derivative(int l, double theta) { return -eigenvalue(l) * value(l, theta); }

int CoverFourierBasis::l0(double alpha) {
  const int j = static_cast<int>(std::lround(std::abs(2.0 * (alpha - 1.0))));
  return j == 0 ? 0 : 2 * j - 1;
}

double CoverFourierBasis::eigen_residual(int l, int samples) const {
  const double lam = eigenvalue(l);
  const double f = 0.5 * frequency(l);
  double worst = 0.0;
  for (int s = 0; s < samples; ++s) {
    const double th = 4.0 * kPi * s / samples;
    // second derivative from the closed form of the mode, independent of eigenvalue()
    double d2 = 0.0;
    if (l > 0) d2 = -f * f * kSqrt2 * (is_sine(l) ? std::sin(f * th) : std::cos(f * th));
    worst = std::max(worst, std::abs(d2 + lam * value(l, th)));
  }
  return worst;
}

Eigen::MatrixXd CoverFourierBasis::orthonormality_matrix(int samples) const {
  const int L = size();
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(L, L);
  Eigen::VectorXd v(L);
  for (int s = 0; s < samples; ++s) {
    const double th = 4.0 * kPi * s / samples;
    for (int l = 0; l < L; ++l) v[l] = value(l, th);
    G += v * v.transpose();
  }
  return G / samples;
}

FourierCoefficients fourier_coefficients(const CoverFunction& w, int m, double r, const Vec& y, int samples) {
  if (samples < 8) throw InvalidInput("fourier_coefficients: too few samples");
  FourierCoefficients out;
  out.r = r;
  out.y = y;
  out.basis.max_frequency = samples / 2 - 1;
  const int L = out.basis.size();
  out.w = Eigen::MatrixXd::Zero(m, L);
  for (int s = 0; s < samples; ++s) {
    const double th = 4.0 * kPi * s / samples;
    const Vec v = w(r, th, y);
    if (v.size() != m) throw InvalidInput("fourier_coefficients: codimension mismatch");
    out.angular_norm_sq += v.squaredNorm();
    for (int l = 0; l < L; ++l) out.w.col(l) += v * CoverFourierBasis::value(l, th);
  }
  out.w /= samples;
  out.angular_norm_sq /= samples;
  out.parseval_residual = std::abs(out.angular_norm_sq - out.w.squaredNorm());
  return out;
}

Vec profile_derivative(const CylindricalProfile& phi, int i, double r, double theta) {
  const double a = phi.alpha();
  const Complex zp = std::pow(r, a - 1.0) * std::exp(Complex(0.0, (a - 1.0) * theta));
  const Complex f = i == 0 ? Complex(a, 0.0) : Complex(0.0, a);
  Vec d(phi.codim());
  for (int q = 0; q < phi.codim(); ++q) d[q] = (f * phi.c()[q] * zp).real();
  return d;
}

int span_dimension(int n, int m) { return 2 * m + 2 * (n - 2); }

Vec span_element(const CylindricalProfile& phi, int index, double r, double theta, const Vec& y) {
  const int m = phi.codim(), n = phi.dim();
  const double a = phi.alpha();
  if (index < 0 || index >= span_dimension(n, m)) throw InvalidInput("span_element: index out of range");
  if (index < 2 * m) {
    Vec e = Vec::Zero(m);
    const double ra = std::pow(r, a);
    e[index % m] = index < m ? ra * std::cos(a * theta) : ra * std::sin(a * theta);
    return e;
  }
  const int t = index - 2 * m;
  const int j = t / 2;
  return profile_derivative(phi, t % 2, r, theta) * y[j];
}

Vec Projection::psi(const CylindricalProfile& phi, double r, double theta, const Vec& y) const {
  Vec out = Vec::Zero(phi.codim());
  for (int i = 0; i < coefficients.size(); ++i) out += coefficients[i] * span_element(phi, i, r, theta, y);
  return out;
}

Projection project_L(const CoverFunction& w, const CylindricalProfile& phi, double rho, const QuadLevel& level) {
  const int n = phi.dim(), m = phi.codim();
  const int P = span_dimension(n, m);
  const QuadratureRule rule = standard_ball(n, rho, level);
  // layout: gram (P*P), <w, L_i> (P), |w|^2 (1)
  const Eigen::VectorXd acc = cover_integrate(rule, P * P + P + 1, [&](const Ring& rg, double th, double wt,
                                                                        Eigen::VectorXd& out) {
    const Vec v = w(rg.r, th, rg.y);
    std::vector<Vec> basis(P);
    for (int i = 0; i < P; ++i) basis[i] = span_element(phi, i, rg.r, th, rg.y);
    for (int i = 0; i < P; ++i) {
      for (int j = 0; j < P; ++j) out[i * P + j] += wt * basis[i].dot(basis[j]);
      out[P * P + i] += wt * basis[i].dot(v);
    }
    out[P * P + P] += wt * v.squaredNorm();
  });
  Projection p;
  p.rho = rho;
  p.gram = Eigen::Map<const Eigen::MatrixXd>(acc.data(), P, P);
  const Eigen::VectorXd b = acc.segment(P * P, P);
  p.w_norm_sq = acc[P * P + P];
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(p.gram);
  const double lo = es.eigenvalues().minCoeff(), hi = es.eigenvalues().maxCoeff();
  p.gram_condition = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  if (!(lo > 0.0) || p.gram_condition > 1e12) throw IllConditioned("project_L: singular Gram matrix");
  p.coefficients = p.gram.ldlt().solve(b);
  p.psi_norm_sq = p.coefficients.dot(p.gram * p.coefficients);
  // remainder and its inner products with L, evaluated directly
  const Eigen::VectorXd rem = cover_integrate(rule, P + 1, [&](const Ring& rg, double th, double wt,
                                                                 Eigen::VectorXd& out) {
    const Vec d = w(rg.r, th, rg.y) - p.psi(phi, rg.r, th, rg.y);
    for (int i = 0; i < P; ++i) out[i] += wt * span_element(phi, i, rg.r, th, rg.y).dot(d);
    out[P] += wt * d.squaredNorm();
  });
  p.remainder_norm_sq = rem[P];
  const double wn = std::sqrt(p.w_norm_sq);
  p.pythagoras_defect = p.w_norm_sq > 0.0
                            ? std::abs(p.w_norm_sq - p.psi_norm_sq - p.remainder_norm_sq) / p.w_norm_sq
                            : 0.0;
  for (int i = 0; i < P; ++i) {
    const double li = std::sqrt(p.gram(i, i));
    if (wn > 0.0) p.orthogonality = std::max(p.orthogonality, std::abs(rem[i]) / (wn * li));
  }
  return p;
}

CoverFunction projection_part(const Projection& p, const CylindricalProfile& phi) {
  return [p, phi](double r, double theta, const Vec& y) { return p.psi(phi, r, theta, y); };
}

CoverFunction remainder_part(const CoverFunction& w, const Projection& p, const CylindricalProfile& phi) {
  return [w, p, phi](double r, double theta, const Vec& y) -> Vec { return w(r, theta, y) - p.psi(phi, r, theta, y); };
}

double cover_norm_sq(const CoverFunction& w, const CylindricalProfile& phi, double rho, const QuadLevel& level) {
  const QuadratureRule rule = standard_ball(phi.dim(), rho, level);
  return cover_integrate(rule, 1, [&](const Ring& rg, double th, double wt, Eigen::VectorXd& out) {
    out[0] += wt * w(rg.r, th, rg.y).squaredNorm();
  })[0];
}

CoverFunction cover_difference(FieldPtr u, const CylindricalProfile& phi, double scale) {
  if (!u || u->dim() != phi.dim() || u->codim() != phi.codim())
    throw InvalidInput("cover_difference: field and profile shapes differ");
  if (!(scale > 0.0)) throw InvalidInput("cover_difference: scale must be positive");
  const Frame fr = phi.frame();
  const int n = phi.dim();
  return [u, phi, fr, n, scale](double r, double theta, const Vec& y) -> Vec {
    Vec local(n);
    local[0] = r * std::cos(theta);
    local[1] = r * std::sin(theta);
    for (int d = 2; d < n; ++d) local[d] = y[d - 2];
    const UnorderedPair v = u->eval(fr.to_global(local));
    const Vec s = phi.cover_value(r, theta);
    const Vec& e = (v.a1 - s).squaredNorm() <= (v.a2 - s).squaredNorm() ? v.a1 : v.a2;
    return (e - s) / scale;
  };
}

BoundaryTermEstimate half_case_boundary_term(const CoverFunction& w, const CylindricalProfile& phi, int p, int i,
                                             const Vec& y0, double r_max, int count, double resolution) {
  const int n = phi.dim();
  if (phi.k() != 1) throw InvalidInput("half_case_boundary_term: requires alpha = 1/2");
  if (n < 3) throw InvalidInput("half_case_boundary_term: requires an axis variable (n >= 3)");
  if (p < 0 || p >= n - 2 || i < 0 || i > 1) throw InvalidInput("half_case_boundary_term: index out of range");
  if (count < 3) throw InvalidInput("half_case_boundary_term: need at least three radii");
  const int samples = 128;
  auto Q = [&](double r, const Vec& y) {
    double s = 0.0;
    for (int j = 0; j < 2 * samples; ++j) {
      const double th = 2.0 * kPi * j / samples;
      s += r * w(r, th, y).dot(profile_derivative(phi, i, r, th));
    }
    // half of the cover integral equals the integral over the circle
    return 0.5 * s * (2.0 * kPi / samples);
  };
  BoundaryTermEstimate out;
  out.radii.resize(count);
  out.values.resize(count);
  parallel_for(static_cast<std::size_t>(count), [&](std::size_t q) {
    const double r = r_max * std::pow(0.5, static_cast<double>(q));
    const double hr = 0.1 * r, hy = 1e-3;
    Vec yp = y0, ym = y0;
    yp[p] += hy;
    ym[p] -= hy;
    out.radii[q] = r;
    out.values[q] = (Q(r + hr, yp) - Q(r + hr, ym) - Q(r - hr, yp) + Q(r - hr, ym)) / (4.0 * hr * hy);
  });
  std::vector<double> ex(count - 1);
  for (int q = 0; q + 1 < count; ++q) ex[q] = 2.0 * out.values[q + 1] - out.values[q];
  out.limit = ex.back();
  double scale = 0.0;
  for (double v : out.values) scale = std::max(scale, std::abs(v));
  const double d1 = std::abs(ex[count - 2] - ex[count - 3]);
  const double d0 = count >= 4 ? std::abs(ex[count - 3] - ex[count - 4]) : d1;
  out.uncertainty = d1 + 1e-9 * (1.0 + scale);
  out.low_confidence = (resolution > 0.0 && out.radii.back() < 4.0 * resolution) || d1 > d0 + 1e-12 * (1.0 + scale);
  return out;
}

DecayCheckReport radial_decay_check(const CoverFunction& w, const CylindricalProfile& phi,
                                    const DecayCheckOptions& opt) {
  const int n = phi.dim();
  const double a = phi.alpha();
  if (!(opt.theta > 0.0 && opt.theta < 0.25)) throw InvalidInput("radial_decay_check: theta must lie in (0, 1/4)");
  std::vector<double> scales = opt.scales;
  if (scales.empty()) scales = {1.0, 0.25, 0.0625, 0.015625};
  DecayCheckReport rep;
  auto radial_integral = [&](double rho) {
    const QuadratureRule rule = standard_ball(n, rho, opt.level);
    return cover_integrate(rule, 1, [&](const Ring& rg, double th, double wt, Eigen::VectorXd& out) {
      const double R = std::sqrt(rg.r * rg.r + rg.y.squaredNorm());
      out[0] += wt * std::pow(R, 2.0 - n) * radial_derivative(w, a, R, rg.r, th, rg.y).squaredNorm();
    })[0];
  };
  for (double rho : scales) {
    DecayScale s;
    s.rho = rho;
    s.radial_inner = radial_integral(0.25 * rho);
    s.radial_outer = radial_integral(rho);
    const Projection pr = project_L(w, phi, rho, opt.level);
    // radial integrals at roundoff level relative to |w|^2 count as zero
    const double floor = 1e-20 * pr.w_norm_sq * std::pow(rho, -n - 2.0 * a);
    s.ratio = s.radial_outer > floor ? s.radial_inner / s.radial_outer : 0.0;
    const CoverFunction wr = remainder_part(w, pr, phi);
    s.remainder_scaled = std::pow(rho, -n - 2.0 * a) * pr.remainder_norm_sq;
    // lambda at z = 0 by weighted least squares over B_{rho/4}
    const double wexp = n + 2.0 * a - opt.sigma;
    const QuadratureRule inner = standard_ball(n, 0.25 * rho, opt.level);
    const Eigen::VectorXd acc = cover_integrate(inner, 6, [&](const Ring& rg, double th, double wt,
                                                               Eigen::VectorXd& out) {
      const double R = std::sqrt(rg.r * rg.r + rg.y.squaredNorm());
      const double k = wt / std::pow(R, wexp);
      const Vec v = wr(rg.r, th, rg.y);
      const Vec d1 = rho * profile_derivative(phi, 0, rg.r, th);
      const Vec d2 = rho * profile_derivative(phi, 1, rg.r, th);
      out[0] += k * d1.dot(d1);
      out[1] += k * d1.dot(d2);
      out[2] += k * d2.dot(d2);
      out[3] += k * d1.dot(v);
      out[4] += k * d2.dot(v);
      out[5] += k * v.squaredNorm();
    });
    Eigen::Matrix2d G;
    G << acc[0], acc[1], acc[1], acc[2];
    const Eigen::Vector2d b(acc[3], acc[4]);
    const Eigen::Vector2d lam = G.ldlt().solve(b);
    s.lambda_sq = lam.squaredNorm();
    s.concentration = std::pow(rho, wexp) * std::max(0.0, acc[5] - lam.dot(b));
    const double base = pr.remainder_norm_sq;
    s.beta1_needed = base > 0.0 ? s.concentration / base : (s.concentration > 0.0 ? HUGE_VAL : 0.0);
    const double need2 = std::max(s.radial_inner, s.lambda_sq);
    s.beta2_needed = s.remainder_scaled > 0.0 ? need2 / s.remainder_scaled : (need2 > 0.0 ? HUGE_VAL : 0.0);
    rep.scales.push_back(s);
  }
  double b1 = 0.0, b2 = 0.0;
  for (const auto& s : rep.scales) {
    b1 = std::max(b1, s.beta1_needed);
    b2 = std::max(b2, s.beta2_needed);
    rep.gamma = std::max(rep.gamma, s.ratio);
  }
  rep.beta1 = opt.beta1 > 0.0 ? opt.beta1 : 1.5 * b1;
  rep.beta2 = opt.beta2 > 0.0 ? opt.beta2 : 1.5 * b2;
  for (const auto& s : rep.scales) {
    if (!std::isfinite(s.beta1_needed) || s.beta1_needed > rep.beta1) {
      rep.hypotheses_hold = false;
      rep.violation = "concentration bound fails at rho = " + std::to_string(s.rho);
      break;
    }
    if (!std::isfinite(s.beta2_needed) || s.beta2_needed > rep.beta2) {
      rep.hypotheses_hold = false;
      rep.violation = "radial-derivative bound fails at rho = " + std::to_string(s.rho);
      break;
    }
  }
  rep.two_mu = rep.gamma > 0.0 ? -std::log(rep.gamma) / std::log(4.0) : HUGE_VAL;
  if (!rep.hypotheses_hold) return rep;
  const Projection p1 = project_L(w, phi, 1.0, opt.level);
  const Projection pt = project_L(w, phi, opt.theta, opt.level);
  rep.rhs_base = p1.remainder_norm_sq;
  rep.lhs = std::pow(opt.theta, -n - 2.0 * a) * pt.remainder_norm_sq;
  rep.decay_ratio = rep.rhs_base > 0.0 ? rep.lhs / rep.rhs_base : 0.0;
  rep.evaluated = true;
  return rep;
}

}  // namespace branchlab
