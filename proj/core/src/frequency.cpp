#include "branchlab/frequency.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace branchlab {

namespace {

// D_R u per selection at a point with unit radial direction e.
void radial_derivatives(const Jet& j, const Vec& e, Vec& d1, Vec& d2) {
  d1 = j.grad1 * e;
  d2 = j.grad2 * e;
}

void check_ball(const TwoValuedField& u, const Vec& Y, double rho) {
  if (Y.size() != u.dim()) throw InvalidInput("center dimension mismatch");
  if (!(rho > 0.0)) throw InvalidInput("radius must be positive");
  if (!u.contains_ball(Y, rho)) throw InvalidInput("ball outside the field's domain");
}

double scaled_D(const TwoValuedField& u, const Frame& f, double rho, const QuadLevel& level) {
  return std::pow(rho, 2 - u.dim()) * dirichlet_integral(u, f, rho, level);
}

double scaled_H(const TwoValuedField& u, const Frame& f, double rho, const QuadLevel& level) {
  return std::pow(rho, 1 - u.dim()) * sphere_l2(u, f, rho, level);
}

}  // namespace

std::vector<double> FrequencyProfile::dN_drho() const {
  const std::size_t k = radii.size();
  std::vector<double> out(k, 0.0);
  if (k < 2) return out;
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t a = i == 0 ? 0 : i - 1;
    const std::size_t b = i + 1 == k ? k - 1 : i + 1;
    out[i] = (N[b] - N[a]) / (radii[b] - radii[a]);
  }
  return out;
}

void FrequencyProfile::write_csv(std::ostream& os) const {
  auto prec = os.precision(17);
  os << "rho,D,H,N,dN_drho\n";
  const auto d = dN_drho();
  for (std::size_t i = 0; i < radii.size(); ++i)
    os << radii[i] << "," << D[i] << "," << H[i] << "," << N[i] << "," << d[i] << "\n";
  os.precision(prec);
}

double dirichlet_integral(const TwoValuedField& u, const Frame& frame, double rho, const QuadLevel& level) {
  QuadratureRule rule = ball_rule(u.dim(), frame, rho, level);
  return rule.integrate([&](const QuadPoint& p) { return u.jet(p.x).grad_norm_sq(); });
}

double sphere_l2(const TwoValuedField& u, const Frame& frame, double rho, const QuadLevel& level) {
  QuadratureRule rule = sphere_rule(u.dim(), frame, rho, level);
  return rule.integrate([&](const QuadPoint& p) { return u.eval(p.x).norm_sq(); });
}

double ball_l2(const TwoValuedField& u, const Frame& frame, double rho, const QuadLevel& level) {
  QuadratureRule rule = ball_rule(u.dim(), frame, rho, level);
  return rule.integrate([&](const QuadPoint& p) { return u.eval(p.x).norm_sq(); });
}

FrequencyProfile frequency_profile(const TwoValuedField& u, const Vec& Y, const std::vector<double>& radii,
                                   const QuadLevel& level) {
  if (radii.empty()) throw InvalidInput("frequency_profile: no radii");
  for (std::size_t i = 1; i < radii.size(); ++i)
    if (!(radii[i] > radii[i - 1])) throw InvalidInput("frequency_profile: radii must increase");
  check_ball(u, Y, radii.back());
  FrequencyProfile p;
  p.center = Y;
  p.radii = radii;
  p.level = level;
  const Frame f = Frame::at(Y);
  for (double rho : radii) {
    p.D.push_back(scaled_D(u, f, rho, level));
    p.H.push_back(scaled_H(u, f, rho, level));
  }
  double scale = 0.0;
  for (std::size_t i = 0; i < radii.size(); ++i) scale = std::max({scale, p.H[i], p.D[i]});
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (!(p.H[i] > 1e-14 * scale) || scale == 0.0)
      throw DegenerateHeight("frequency_profile: height below floor", radii[i]);
    p.N.push_back(p.D[i] / p.H[i]);
  }
  return p;
}

MonotonicityReport check_monotonicity(const FrequencyProfile& profile, double slack) {
  if (profile.radii.size() < 3) throw InvalidInput("check_monotonicity: need at least 3 radii");
  MonotonicityReport r;
  r.min_slope = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < profile.radii.size(); ++i) {
    const double mid = 0.5 * (profile.radii[i] + profile.radii[i + 1]);
    const double slope = (profile.N[i + 1] - profile.N[i]) / (profile.radii[i + 1] - profile.radii[i]);
    r.midpoints.push_back(mid);
    r.slopes.push_back(slope);
    r.min_slope = std::min(r.min_slope, slope);
    const double scale = std::max({1.0, std::abs(profile.N[i]), std::abs(profile.N[i + 1])});
    if (slope < -slack * scale) r.violations.push_back(mid);
  }
  return r;
}

FrequencyDerivative frequency_derivative(const TwoValuedField& u, const Vec& Y, double rho, const QuadLevel& level,
                                         double h) {
  check_ball(u, Y, rho * (1.0 + h));
  const int n = u.dim();
  const Frame f = Frame::at(Y);
  QuadratureRule rule = sphere_rule(n, f, rho, level);
  Eigen::VectorXd s = rule.integrate_vec(3, [&](const QuadPoint& p, Eigen::VectorXd& out) {
    const Jet j = u.jet(p.x);
    const Vec e = (p.x - Y) / p.R;
    Vec d1, d2;
    radial_derivatives(j, e, d1, d2);
    out[0] = j.value.norm_sq();
    out[1] = p.R * p.R * (d1.squaredNorm() + d2.squaredNorm());
    out[2] = p.R * (j.value.a1.dot(d1) + j.value.a2.dot(d2));
  });
  FrequencyDerivative fd;
  fd.uu = s[0];
  fd.rr = s[1];
  fd.ur = s[2];
  const double H = std::pow(rho, 1 - n) * fd.uu;
  fd.formula = 2.0 * std::pow(rho, 1 - 2 * n) / (H * H) * (fd.uu * fd.rr - fd.ur * fd.ur);
  const double dr = h * rho;
  auto N = [&](double r) { return scaled_D(u, f, r, level) / scaled_H(u, f, r, level); };
  fd.fd_slope = (N(rho + dr) - N(rho - dr)) / (2.0 * dr);
  return fd;
}

DoublingCheck doubling_check(const TwoValuedField& u, const Vec& Y, double sigma, double rho, double N_point,
                             const QuadLevel& level, double rel_tol) {
  if (!(sigma > 0.0) || sigma > rho) throw InvalidInput("doubling_check: need 0 < sigma <= rho");
  check_ball(u, Y, rho);
  const int n = u.dim();
  const Frame f = Frame::at(Y);
  DoublingCheck c;
  c.sigma = sigma;
  c.rho = rho;
  c.N_point = N_point;
  c.H_sigma = scaled_H(u, f, sigma, level);
  c.H_rho = scaled_H(u, f, rho, level);
  if (!(c.H_rho > 0.0) || !(c.H_sigma > 0.0)) throw DegenerateHeight("doubling_check: zero height", sigma);
  c.N_rho = scaled_D(u, f, rho, level) / c.H_rho;
  c.L_sigma = std::pow(sigma, -n) * ball_l2(u, f, sigma, level);
  c.L_rho = std::pow(rho, -n) * ball_l2(u, f, rho, level);
  const double q = sigma / rho;
  c.lower_bound = std::pow(q, 2.0 * c.N_rho) * c.L_rho;
  c.upper_bound = std::pow(q, 2.0 * N_point) * c.L_rho;
  c.lower_margin = c.L_sigma - c.lower_bound;
  c.upper_margin = c.upper_bound - c.L_sigma;
  c.lower_ok = c.lower_margin >= -rel_tol * c.L_sigma;
  c.upper_ok = c.upper_margin >= -rel_tol * c.L_sigma;
  return c;
}

double BumpFunction::value(const Vec& x) const {
  const double q = 1.0 - (x - center).squaredNorm() / (radius * radius);
  return q > 0.0 ? q * q * q * q : 0.0;
}

Vec BumpFunction::gradient(const Vec& x) const {
  const double q = 1.0 - (x - center).squaredNorm() / (radius * radius);
  if (q <= 0.0) return Vec::Zero(x.size());
  return (-8.0 * q * q * q / (radius * radius)) * (x - center);
}

StationarityResiduals stationarity_residuals(const TwoValuedField& u, const StationarityInput& in,
                                             const QuadLevel& level) {
  const int n = u.dim();
  check_ball(u, in.domain_center, in.domain_radius);
  auto inside = [&](const BumpFunction& b) {
    return (b.center - in.domain_center).norm() + b.radius <= in.domain_radius * (1.0 + 1e-12);
  };
  for (const auto& b : in.scalar_tests)
    if (!inside(b)) throw InvalidInput("stationarity: test function support leaves the domain");
  for (const auto& t : in.vector_tests)
    if (!inside(t.bump)) throw InvalidInput("stationarity: test function support leaves the domain");
  const int ns = static_cast<int>(in.scalar_tests.size());
  const int nv = static_cast<int>(in.vector_tests.size());
  QuadratureRule rule = ball_rule(n, Frame::at(in.domain_center), in.domain_radius, level);
  Eigen::VectorXd sums = rule.integrate_vec(ns + nv + 1, [&](const QuadPoint& p, Eigen::VectorXd& out) {
    const Jet j = u.jet(p.x);
    const double e = j.grad_norm_sq();
    for (int t = 0; t < ns; ++t) {
      const auto& b = in.scalar_tests[t];
      const double z = b.value(p.x);
      if (z == 0.0) continue;
      const Vec gz = b.gradient(p.x);
      // u^k D_i u^k D_i z summed over both selections
      const double cross = j.value.a1.dot(j.grad1 * gz) + j.value.a2.dot(j.grad2 * gz);
      out[t] = e * z + cross;
      if (t == 0) out[ns + nv] = e * z;
    }
    for (int t = 0; t < nv; ++t) {
      const auto& tv = in.vector_tests[t];
      const Vec gb = tv.bump.gradient(p.x);
      if (gb.squaredNorm() == 0.0) continue;
      // sum_ij (1/2 e d_ij - D_i u . D_j u) d_i b w_j
      const double a = gb.dot(tv.direction);
      const double c = (j.grad1 * gb).dot(j.grad1 * tv.direction) + (j.grad2 * gb).dot(j.grad2 * tv.direction);
      out[ns + t] = 0.5 * e * a - c;
    }
  });
  StationarityResiduals r;
  for (int t = 0; t < ns; ++t) r.squash = std::max(r.squash, std::abs(sums[t]));
  for (int t = 0; t < nv; ++t) r.squeeze = std::max(r.squeeze, std::abs(sums[ns + t]));
  r.squash_scale = sums[ns + nv];
  const Frame fr = Frame::at(in.radial_center);
  for (double rho : in.radial_radii) {
    check_ball(u, in.radial_center, rho);
    const double bulk = dirichlet_integral(u, fr, rho, level);
    QuadratureRule sph = sphere_rule(n, fr, rho, level);
    const double flux = sph.integrate([&](const QuadPoint& p) {
      const Jet j = u.jet(p.x);
      const Vec e = (p.x - in.radial_center) / p.R;
      return j.value.a1.dot(j.grad1 * e) + j.value.a2.dot(j.grad2 * e);
    });
    r.radial.push_back(std::abs(bulk - flux));
  }
  return r;
}

double observed_order(const std::vector<double>& residuals, double floor) {
  double order = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < residuals.size(); ++i) {
    const double coarse = std::max(residuals[i], floor);
    const double fine = std::max(residuals[i + 1], floor);
    if (coarse <= floor && fine <= floor) continue;
    order = std::min(order, std::log2(coarse / fine));
  }
  return order;
}

RefinementStudy stationarity_study(const TwoValuedField& u, const StationarityInput& input, int first_level,
                                   int last_level, double floor) {
  RefinementStudy st;
  for (int l = first_level; l <= last_level; ++l) {
    const auto r = stationarity_residuals(u, input, QuadLevel::at(l));
    st.levels.push_back(l);
    st.squash.push_back(r.squash);
    st.squeeze.push_back(r.squeeze);
    double rad = 0.0;
    for (double v : r.radial) rad = std::max(rad, v);
    st.radial.push_back(rad);
  }
  st.squash_order = observed_order(st.squash, floor);
  st.squeeze_order = observed_order(st.squeeze, floor);
  st.radial_order = observed_order(st.radial, floor);
  return st;
}

StationarityInput default_stationarity_input(int n, const Vec& center, double radius) {
  StationarityInput in;
  in.domain_center = center;
  in.domain_radius = radius;
  in.radial_center = center;
  in.radial_radii = {0.5 * radius, 0.75 * radius};
  const double pi = 3.14159265358979323846;
  for (int k = 0; k < 3; ++k) {
    BumpFunction b;
    b.center = center;
    b.center[0] += 0.25 * radius * std::cos(2.0 * pi * k / 3.0 + 0.3);
    b.center[1] += 0.25 * radius * std::sin(2.0 * pi * k / 3.0 + 0.3);
    if (n >= 3) b.center[2] += 0.1 * radius * (k - 1);
    b.radius = 0.6 * radius;
    in.scalar_tests.push_back(b);
    for (int d = 0; d < n; ++d) {
      TestVectorField t;
      t.bump = b;
      t.direction = Vec::Zero(n);
      t.direction[d] = 1.0;
      in.vector_tests.push_back(t);
    }
  }
  return in;
}

std::vector<NewMonotonicityRow> new_monotonicity_residual(const TwoValuedField& u, const Vec& Y, double alpha,
                                                          const std::vector<double>& radii, const QuadLevel& level,
                                                          double rel_step) {
  const int n = u.dim();
  const Frame f = Frame::at(Y);
  std::vector<NewMonotonicityRow> rows;
  for (double rho : radii) {
    const double h = rel_step * rho;
    check_ball(u, Y, rho + 2.0 * h);
    auto F = [&](double r) {
      return std::pow(r, -2.0 * alpha) * (scaled_D(u, f, r, level) - alpha * scaled_H(u, f, r, level));
    };
    NewMonotonicityRow row;
    row.rho = rho;
    row.lhs = (-F(rho + 2 * h) + 8.0 * F(rho + h) - 8.0 * F(rho - h) + F(rho - 2 * h)) / (12.0 * h);
    QuadratureRule rule = sphere_rule(n, f, rho, level);
    const double s = rule.integrate([&](const QuadPoint& p) {
      const Jet j = u.jet(p.x);
      const Vec e = (p.x - Y) / p.R;
      const double w = std::pow(p.R, -alpha);
      const Vec g1 = w * (j.grad1 * e - alpha * j.value.a1 / p.R);
      const Vec g2 = w * (j.grad2 * e - alpha * j.value.a2 / p.R);
      return g1.squaredNorm() + g2.squaredNorm();
    });
    row.rhs = 2.0 * std::pow(rho, 2 - n) * s;
    row.residual = row.lhs - row.rhs;
    rows.push_back(row);
  }
  return rows;
}

PointFrequency frequency_at_point(const TwoValuedField& u, const Vec& Y, double rho_max, int count,
                                  const QuadLevel& level, double slack) {
  if (count < 3) throw InvalidInput("frequency_at_point: need at least 3 radii");
  std::vector<double> radii;
  for (int i = count - 1; i >= 0; --i) radii.push_back(rho_max * std::ldexp(1.0, -i));
  const FrequencyProfile p = frequency_profile(u, Y, radii, level);
  PointFrequency out;
  out.radii = p.radii;
  out.N = p.N;
  // index 0 is the smallest radius; Richardson in rho^2 for halving radii
  std::vector<double> rich;
  for (int i = 0; i + 1 < count; ++i) rich.push_back((4.0 * p.N[i] - p.N[i + 1]) / 3.0);
  out.estimate = rich[0];
  out.uncertainty = std::abs(rich[0] - rich[1]) + 1e-12;
  for (int i = 0; i + 1 < count; ++i)
    if (p.N[i] > p.N[i + 1] + slack * std::max(1.0, std::abs(p.N[i + 1]))) out.monotone = false;
  out.low_confidence = !out.monotone;
  return out;
}

ExcessRatios excess_ratios(const TwoValuedField& u, const TwoValuedField& phi, double alpha, double gamma,
                           const QuadLevel& level) {
  const int n = u.dim();
  const Vec O = Vec::Zero(n);
  check_ball(u, O, 1.0);
  check_ball(phi, O, 1.0);
  ExcessRatios r;
  QuadratureRule inner = ball_rule(n, Frame::at(O), gamma, level);
  Eigen::VectorXd s = inner.integrate_vec(2, [&](const QuadPoint& p, Eigen::VectorXd& out) {
    const Jet j = u.jet(p.x);
    const Vec e = p.x / p.R;
    const double w = std::pow(p.R, -alpha);
    const Vec g1 = w * (j.grad1 * e - alpha * j.value.a1 / p.R);
    const Vec g2 = w * (j.grad2 * e - alpha * j.value.a2 / p.R);
    out[0] = std::pow(p.R, 2 - n) * (g1.squaredNorm() + g2.squaredNorm());
    double ax = 0.0;
    for (int d = 2; d < n; ++d) ax += j.grad1.col(d).squaredNorm() + j.grad2.col(d).squaredNorm();
    out[1] = ax;
  });
  r.radial_lhs = s[0];
  r.axial_lhs = s[1];
  QuadratureRule outer = ball_rule(n, Frame::at(O), 1.0, level);
  r.excess = outer.integrate([&](const QuadPoint& p) { return metric_g_sq(u.eval(p.x), phi.eval(p.x)); });
  r.radial_ratio = r.excess > 0.0 ? r.radial_lhs / r.excess : std::numeric_limits<double>::quiet_NaN();
  r.axial_ratio = r.excess > 0.0 ? r.axial_lhs / r.excess : std::numeric_limits<double>::quiet_NaN();
  return r;
}

}  // namespace branchlab
