#include "branchlab/profiles.hpp"

#include "branchlab/parallel.hpp"
#include "branchlab/sampled_field.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <deque>
#include <limits>
#include <sstream>

namespace branchlab {

namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;

std::vector<Vec> lift_two_laps(const std::vector<Vec>& lap) {
  const std::size_t nt = lap.size();
  std::vector<Vec> out(2 * nt);
  for (std::size_t k = 0; k < 2 * nt; ++k) {
    const Vec& raw = lap[k % nt];
    if (k == 0) {
      out[k] = raw;
      continue;
    }
    Vec pred = k >= 2 ? Vec(2.0 * out[k - 1] - out[k - 2]) : out[k - 1];
    out[k] = (pred - raw).squaredNorm() <= (pred + raw).squaredNorm() ? raw : Vec(-raw);
  }
  return out;
}

// Lift matches the sheet structure expected for parity of k.
bool holonomy_ok(const std::vector<Vec>& lifted, int k) {
  const std::size_t nt = lifted.size() / 2;
  const double h = (k % 2 == 1) ? -1.0 : 1.0;
  double bad = 0.0, scale = 0.0;
  for (std::size_t j = 0; j < nt; ++j) {
    bad = std::max(bad, (lifted[j + nt] - h * lifted[j]).norm());
    scale = std::max(scale, lifted[j].norm());
  }
  return bad <= 1e-6 * scale + 1e-300;
}

QuadLevel fit_level(const FitOptions& opt, int n) {
  return opt.quad_level >= 0 ? QuadLevel::at(opt.quad_level) : default_fit_level(n);
}

Mat to_mat(const Eigen::MatrixXd& m) { return Mat(m); }

}  // namespace

int skew_parameter_count(int n) { return n >= 3 ? 2 * (n - 2) : 0; }

Mat skew_from_parameters(int n, const Eigen::VectorXd& p) {
  if (p.size() != skew_parameter_count(n)) throw InvalidInput("skew_from_parameters: wrong parameter count");
  Mat A = Mat::Zero(n, n);
  int q = 0;
  for (int i = 0; i < 2; ++i)
    for (int j = 2; j < n; ++j) {
      A(i, j) = p[q];
      A(j, i) = -p[q];
      ++q;
    }
  return A;
}

Eigen::VectorXd skew_parameters(const Mat& A) {
  const int n = static_cast<int>(A.rows());
  Eigen::VectorXd p(skew_parameter_count(n));
  int q = 0;
  for (int i = 0; i < 2; ++i)
    for (int j = 2; j < n; ++j) p[q++] = A(i, j);
  return p;
}

bool in_skew_space(const Mat& A, double tol) {
  const int n = static_cast<int>(A.rows());
  if (A.cols() != n) return false;
  if ((A + A.transpose()).cwiseAbs().maxCoeff() > tol) return false;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const bool both_low = i < 2 && j < 2;
      const bool both_high = i >= 2 && j >= 2;
      if ((both_low || both_high) && std::abs(A(i, j)) > tol) return false;
    }
  return true;
}

CylindricalProfile::CylindricalProfile(int n, CVec c, int k, Mat A, Vec Z)
    : n_(n), c_(std::move(c)), k_(k), A_(std::move(A)), Z_(std::move(Z)) {
  if (n < 2 || n > kMaxDim) throw InvalidInput("profile: n must be 2, 3 or 4");
  if (k < 1) throw InvalidInput("profile: k must be positive");
  if (c_.size() < 1) throw InvalidInput("profile: empty c");
  if (A_.size() == 0) A_ = Mat::Zero(n, n);
  if (Z_.size() == 0) Z_ = Vec::Zero(n);
  if (A_.rows() != n || A_.cols() != n || Z_.size() != n) throw InvalidInput("profile: shape mismatch");
  if (!in_skew_space(A_, 1e-12)) throw InvalidInput("profile: A is not in the skew space S");
  Eigen::MatrixXd a = A_;
  Q_ = to_mat(a.exp());
}

Vec CylindricalProfile::selection(const Vec& x, Mat* grad) const {
  if (x.size() != n_) throw InvalidInput("profile: point dimension mismatch");
  const Vec local = Q_ * (x - Z_);
  const Complex z(local[0], local[1]);
  const double a = alpha();
  const int m = codim();
  Vec s(m);
  const double r = std::abs(z);
  const Complex w = r == 0.0 ? Complex(0.0, 0.0) : std::pow(z, a);
  for (int q = 0; q < m; ++q) s[q] = (c_[q] * w).real();
  if (grad) {
    Complex dw;
    if (r == 0.0) {
      if (a < 1.0) throw SingularEvaluation("profile: gradient on the axis");
      dw = a == 1.0 ? Complex(1.0, 0.0) : Complex(0.0, 0.0);
    } else {
      dw = a * std::pow(z, a - 1.0);
    }
    Mat gl = Mat::Zero(m, n_);
    for (int q = 0; q < m; ++q) {
      gl(q, 0) = (c_[q] * dw).real();
      gl(q, 1) = (Complex(0.0, 1.0) * c_[q] * dw).real();
    }
    *grad = gl * Q_;
  }
  return s;
}

UnorderedPair CylindricalProfile::eval(const Vec& x) const { return UnorderedPair::symmetric(selection(x)); }

Jet CylindricalProfile::jet(const Vec& x) const {
  Mat g;
  Vec s = selection(x, &g);
  return {UnorderedPair::symmetric(s), g, -g};
}

Vec CylindricalProfile::cover_value(double r, double theta) const {
  const double a = alpha();
  const Complex w = std::pow(r, a) * std::exp(Complex(0.0, a * theta));
  Vec s(codim());
  for (int q = 0; q < codim(); ++q) s[q] = (c_[q] * w).real();
  return s;
}

Frame CylindricalProfile::frame() const { return {Z_, Q_.transpose()}; }

double excess(const TwoValuedField& u, const TwoValuedField& phi, const Vec& center, double radius,
              const QuadLevel& level) {
  return l2_distance_sq(u, phi, center, radius, level);
}

QuadLevel default_fit_level(int n) { return QuadLevel::at(n == 2 ? 4 : (n == 3 ? 3 : 2)); }

FitCResult fit_c(const TwoValuedField& u, const CylindricalProfile& guess, const FitOptions& opt) {
  const int n = u.dim(), m = u.codim();
  if (guess.dim() != n || guess.codim() != m) throw InvalidInput("fit_c: profile shape mismatch");
  if (guess.c().norm() == 0.0) throw InvalidInput("fit_c: degenerate guess c = 0");
  const Frame fr = guess.frame();
  if (!u.contains_ball(fr.origin, opt.radius)) throw InvalidInput("fit_c: fit ball outside the field's domain");
  const QuadratureRule rule = ball_rule(n, fr, opt.radius, fit_level(opt, n));
  const int nt = rule.n_theta();
  const double a = guess.alpha();
  const std::size_t nr = rule.rings().size();
  // per ring: 2x2 Gram (3 entries), rhs (2m), |g|^2, flag
  const int width = 3 + 2 * m + 2;
  std::vector<Eigen::VectorXd> part(nr, Eigen::VectorXd::Zero(width));
  parallel_for(nr, [&](std::size_t i) {
    const Ring& rg = rule.rings()[i];
    Eigen::VectorXd& acc = part[i];
    if (rg.r <= opt.tube) return;
    std::vector<Vec> lap(nt);
    for (int j = 0; j < nt; ++j) lap[j] = decompose(u.eval(rule.point(i, j).x)).symmetric.a1;
    std::vector<Vec> g = lift_two_laps(lap);
    if (!holonomy_ok(g, guess.k())) {
      acc[width - 1] = 1.0;
      return;
    }
    double corr = 0.0;
    for (int j = 0; j < 2 * nt; ++j) corr += g[j].dot(guess.cover_value(rg.r, 2.0 * kPi * j / nt));
    const double sgn = corr < 0.0 ? -1.0 : 1.0;
    const double w = 0.5 * rg.weight;
    const double ra = std::pow(rg.r, a);
    for (int j = 0; j < 2 * nt; ++j) {
      const double th = 2.0 * kPi * j / nt;
      const double b1 = ra * std::cos(a * th), b2 = -ra * std::sin(a * th);
      acc[0] += w * b1 * b1;
      acc[1] += w * b1 * b2;
      acc[2] += w * b2 * b2;
      for (int q = 0; q < m; ++q) {
        acc[3 + 2 * q] += w * sgn * g[j][q] * b1;
        acc[4 + 2 * q] += w * sgn * g[j][q] * b2;
      }
      acc[3 + 2 * m] += w * g[j].squaredNorm();
    }
  });
  Eigen::VectorXd tot = Eigen::VectorXd::Zero(width);
  FitCResult res;
  for (std::size_t i = 0; i < nr; ++i) {
    if (part[i][width - 1] > 0.0) {
      ++res.rings_skipped;
      continue;
    }
    if (rule.rings()[i].r > opt.tube) ++res.rings_used;
    tot += part[i];
  }
  Eigen::Matrix2d G;
  G << tot[0], tot[1], tot[1], tot[2];
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(G);
  const double lo = es.eigenvalues()[0], hi = es.eigenvalues()[1];
  res.condition = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  if (!(lo > 0.0) || res.condition > 1e12) throw IllConditioned("fit_c: singular normal equations");
  res.c = CVec(m);
  double fitted = 0.0;
  for (int q = 0; q < m; ++q) {
    Eigen::Vector2d rhs(tot[3 + 2 * q], tot[4 + 2 * q]);
    Eigen::Vector2d sol = G.ldlt().solve(rhs);
    res.c[q] = Complex(sol[0], sol[1]);
    fitted += sol.dot(rhs);
  }
  res.residual = std::max(0.0, tot[3 + 2 * m] - fitted);
  return res;
}

FitRotationResult fit_rotation(const TwoValuedField& u, const CylindricalProfile& phi, const FitOptions& opt) {
  const int n = u.dim(), m = u.codim();
  FitRotationResult res;
  res.A = phi.A();
  const QuadratureRule rule = ball_rule(n, phi.frame(), opt.radius, fit_level(opt, n));
  const std::size_t np = rule.size();
  const int nt = rule.n_theta();
  std::vector<UnorderedPair> uv(np);
  std::vector<Vec> xs(np);
  std::vector<double> ws(np);
  rule.for_each_ring([&](std::size_t i) {
    for (int j = 0; j < nt; ++j) {
      const QuadPoint p = rule.point(i, j);
      const std::size_t q = i * nt + j;
      xs[q] = p.x;
      ws[q] = p.weight;
      uv[q] = u.eval(p.x);
    }
  });
  auto objective = [&](const CylindricalProfile& f) {
    return parallel_sum(rule.rings().size(), [&](std::size_t i) {
      double s = 0.0;
      for (int j = 0; j < nt; ++j) {
        const std::size_t q = i * nt + j;
        s += ws[q] * metric_g_sq(uv[q], f.eval(xs[q]));
      }
      return s;
    });
  };
  res.initial_objective = objective(phi);
  res.objective = res.initial_objective;
  res.trace.push_back(res.objective);
  if (n == 2) {
    res.converged = true;
    return res;
  }
  const int P = skew_parameter_count(n);
  Eigen::VectorXd p = skew_parameters(phi.A());
  CylindricalProfile cur = phi;
  for (int it = 0; it < opt.max_gauss_newton; ++it) {
    res.iterations = it + 1;
    // freeze the pairing and the reference branch at the current parameters
    std::vector<Vec> sref(np);
    std::vector<char> swap(np);
    rule.for_each_ring([&](std::size_t i) {
      for (int j = 0; j < nt; ++j) {
        const std::size_t q = i * nt + j;
        sref[q] = cur.selection(xs[q]);
        swap[q] = optimal_pairing({sref[q], -sref[q]}, uv[q]) == Pairing::swap;
      }
    });
    auto residual = [&](const CylindricalProfile& f) {
      Eigen::VectorXd r(static_cast<Eigen::Index>(np) * 2 * m);
      rule.for_each_ring([&](std::size_t i) {
        for (int j = 0; j < nt; ++j) {
          const std::size_t q = i * nt + j;
          Vec s = f.selection(xs[q]);
          if ((s + sref[q]).squaredNorm() < (s - sref[q]).squaredNorm()) s = -s;
          const Vec& ua = swap[q] ? uv[q].a2 : uv[q].a1;
          const Vec& ub = swap[q] ? uv[q].a1 : uv[q].a2;
          const double sw = std::sqrt(ws[q]);
          r.segment(static_cast<Eigen::Index>(q) * 2 * m, m) = sw * (ua - s);
          r.segment(static_cast<Eigen::Index>(q) * 2 * m + m, m) = sw * (ub + s);
        }
      });
      return r;
    };
    const Eigen::VectorXd r0 = residual(cur);
    Eigen::MatrixXd J(r0.size(), P);
    const double h = 1e-6;
    for (int k = 0; k < P; ++k) {
      Eigen::VectorXd pp = p, pm = p;
      pp[k] += h;
      pm[k] -= h;
      J.col(k) = (residual(cur.with_A(skew_from_parameters(n, pp))) -
                  residual(cur.with_A(skew_from_parameters(n, pm)))) /
                 (2.0 * h);
    }
    const Eigen::MatrixXd JtJ = J.transpose() * J;
    const Eigen::VectorXd step = -JtJ.ldlt().solve(J.transpose() * r0);
    if (!step.allFinite() || step.norm() < 1e-14) {
      res.converged = true;
      break;
    }
    bool accepted = false;
    double t = 1.0;
    for (int b = 0; b < 20; ++b, t *= 0.5) {
      const Eigen::VectorXd pn = p + t * step;
      const Mat An = skew_from_parameters(n, pn);
      if (An.norm() > opt.rotation_bound) continue;
      const CylindricalProfile cand = cur.with_A(An);
      const double obj = objective(cand);
      if (obj < res.objective) {
        const double prev = res.objective;
        p = pn;
        cur = cand;
        res.objective = obj;
        res.trace.push_back(obj);
        accepted = true;
        if (prev - obj <= 1e-14 * prev) res.converged = true;
        break;
      }
    }
    if (!accepted) {
      // no decrease along the Gauss-Newton direction: best-so-far is a stationary point to working precision
      res.converged = res.objective <= 1e-24 || t * step.norm() < 1e-10;
      break;
    }
    if (res.converged) break;
  }
  res.A = cur.A();
  return res;
}

FitProfileResult fit_profile(const TwoValuedField& u, const CylindricalProfile& guess, const FitOptions& opt) {
  if (guess.c().norm() == 0.0) throw InvalidInput("fit_profile: degenerate guess c = 0");
  const int n = u.dim();
  const QuadLevel level = fit_level(opt, n);
  FitProfileResult res{guess, 0.0, 0.0, 0, true};
  res.initial_excess = excess(u, guess, guess.center(), opt.radius, level);
  double prev = res.initial_excess;
  CylindricalProfile cur = guess;
  for (int it = 0; it < opt.max_alternations; ++it) {
    res.alternations = it + 1;
    const FitCResult fc = fit_c(u, cur, opt);
    cur = cur.with_c(fc.c);
    if (n >= 3) {
      const FitRotationResult fr = fit_rotation(u, cur, opt);
      cur = cur.with_A(fr.A);
      res.rotation_converged = fr.converged;
    }
    const double e = excess(u, cur, cur.center(), opt.radius, level);
    const bool done = n == 2 || std::abs(prev - e) <= 1e-10 * std::max(prev, 1e-300) || e == 0.0;
    prev = e;
    if (done) break;
  }
  res.profile = cur;
  res.excess = prev;
  return res;
}

GraphRepresentation graphical_decompose(const TwoValuedField& u, const CylindricalProfile& phi, double tau,
                                        double gamma, double beta, const GraphGrid& grid) {
  const int n = u.dim();
  if (n < 2 || n > 3) throw InvalidInput("graphical_decompose: n must be 2 or 3");
  if (!(gamma > 0.0 && gamma <= 1.0) || tau < 0.0 || tau >= gamma)
    throw InvalidInput("graphical_decompose: need 0 <= tau < gamma <= 1");
  const Frame fr = phi.frame();
  if (!u.contains_ball(fr.origin, 1.0)) throw InvalidInput("graphical_decompose: B_1 outside the field's domain");
  const double a = phi.alpha();
  const int nr = grid.n_radial, nt = grid.n_theta, ny = n == 3 ? grid.n_axial : 1;
  const double dr = gamma / nr, dth = 2.0 * kPi / nt, dy = n == 3 ? 2.0 * gamma / ny : 1.0;
  GraphRepresentation rep;
  rep.tau = tau;
  rep.gamma = gamma;
  rep.beta = beta;
  rep.grid = grid;
  // circles (i, l) -> slot
  std::vector<int> slot(static_cast<std::size_t>(nr) * ny, -1);
  for (int l = 0; l < ny; ++l) {
    const double y = n == 3 ? -gamma + (l + 0.5) * dy : 0.0;
    for (int i = 0; i < nr; ++i) {
      const double r = (i + 0.5) * dr;
      if (r * r + y * y >= gamma * gamma) continue;
      slot[static_cast<std::size_t>(l) * nr + i] = static_cast<int>(rep.circle_r.size());
      rep.circle_r.push_back(r);
      Vec yv(n - 2);
      if (n == 3) yv[0] = y;
      rep.circle_y.push_back(yv);
    }
  }
  const std::size_t nc = rep.circle_r.size();
  rep.nodes.resize(nc * nt);
  std::vector<char> admissible(nc, 0);
  std::vector<char> paired(nc, 0);  // lift around the circle has the holonomy of phi
  std::vector<double> complement_part(nc, 0.0);
  parallel_for(nc, [&](std::size_t c) {
    const double r = rep.circle_r[c];
    std::vector<Jet> jets(nt);
    std::vector<Vec> lap(nt), avg(nt);
    for (int j = 0; j < nt; ++j) {
      const double th = j * dth;
      Vec local(n);
      local[0] = r * std::cos(th);
      local[1] = r * std::sin(th);
      if (n == 3) local[2] = rep.circle_y[c][0];
      GraphNode& node = rep.nodes[c * nt + j];
      node.x = fr.to_global(local);
      node.r = r;
      jets[j] = u.jet(node.x);
      const Decomposition d = decompose(jets[j].value);
      lap[j] = d.symmetric.a1;
      avg[j] = d.average;
    }
    double cell = r * dr * dth * (n == 3 ? dy : 1.0);
    double comp = 0.0;
    for (int j = 0; j < nt; ++j) comp += cell * (jets[j].value.norm_sq() + r * r * jets[j].grad_norm_sq());
    complement_part[c] = comp;
    std::vector<Vec> g = lift_two_laps(lap);
    if (!holonomy_ok(g, phi.k())) return;
    paired[c] = 1;
    double corr = 0.0;
    for (int j = 0; j < 2 * nt; ++j) corr += g[j].dot(phi.cover_value(r, j * dth));
    const double sgn = corr < 0.0 ? -1.0 : 1.0;
    double worst = 0.0;
    for (int j = 0; j < nt; ++j) {
      const double th = j * dth;
      GraphNode& node = rep.nodes[c * nt + j];
      const Vec ua = avg[j] + sgn * g[j];
      const Vec ub = avg[j] - sgn * g[j];
      const bool first = (jets[j].value.a1 - ua).squaredNorm() <= (jets[j].value.a2 - ua).squaredNorm();
      const Mat& Dua = first ? jets[j].grad1 : jets[j].grad2;
      const Mat& Dub = first ? jets[j].grad2 : jets[j].grad1;
      const Vec p1 = phi.cover_value(r, th);
      // derivative of the cover selection in local coordinates, then global
      const double ra = std::pow(r, a);
      const Complex e = std::exp(Complex(0.0, a * th));
      Mat gl = Mat::Zero(phi.codim(), n);
      for (int q = 0; q < phi.codim(); ++q) {
        const double d_r = a * std::pow(r, a - 1.0) * (phi.c()[q] * e).real();
        const double d_t = ra * (Complex(0.0, a) * phi.c()[q] * e).real();
        gl(q, 0) = std::cos(th) * d_r - std::sin(th) / r * d_t;
        gl(q, 1) = std::sin(th) * d_r + std::cos(th) / r * d_t;
      }
      const Mat Dp1 = gl * phi.Q();
      node.v_hat = UnorderedPair(ua - p1, ub + p1);
      node.dv1 = Dua - Dp1;
      node.dv2 = Dub + Dp1;
      worst = std::max(worst, std::pow(r, -a) * node.v_hat.norm());
    }
    admissible[c] = worst <= beta ? 1 : 0;
  });
  // flood fill from circles on the outer edge
  std::deque<std::size_t> queue;
  std::vector<char> inU(nc, 0);
  auto at = [&](int i, int l) { return (i < 0 || i >= nr || l < 0 || l >= ny) ? -1 : slot[static_cast<std::size_t>(l) * nr + i]; };
  for (int l = 0; l < ny; ++l)
    for (int i = 0; i < nr; ++i) {
      const int s = at(i, l);
      if (s < 0) continue;
      const bool outer = at(i + 1, l) < 0 || (n == 3 && (at(i, l + 1) < 0 || at(i, l - 1) < 0));
      if (outer && admissible[s] && !inU[s]) {
        inU[s] = 1;
        queue.push_back(static_cast<std::size_t>(s));
      }
    }
  while (!queue.empty()) {
    const std::size_t s = queue.front();
    queue.pop_front();
    const int i = static_cast<int>(std::lround(rep.circle_r[s] / dr - 0.5));
    const int l = n == 3 ? static_cast<int>(std::lround((rep.circle_y[s][0] + gamma) / dy - 0.5)) : 0;
    const int nb[4][2] = {{i - 1, l}, {i + 1, l}, {i, l - 1}, {i, l + 1}};
    for (const auto& q : nb) {
      const int t = at(q[0], q[1]);
      if (t < 0 || inU[t] || !admissible[t]) continue;
      inU[t] = 1;
      queue.push_back(static_cast<std::size_t>(t));
    }
  }
  rep.circle_in_U.assign(inU.begin(), inU.end());
  // circles outside the tube must at least be pairable; large deviations only leave U
  for (std::size_t c = 0; c < nc; ++c) {
    if (!paired[c] && rep.circle_r[c] > tau)
      throw DecompositionFailure("graphical_decompose: pairing fails on a circle outside the tube", rep.circle_r[c],
                                 rep.circle_y[c]);
  }
  for (std::size_t c = 0; c < nc; ++c) {
    const double r = rep.circle_r[c];
    const double cell = r * dr * dth * (n == 3 ? dy : 1.0);
    if (!inU[c]) {
      rep.complement_integral += complement_part[c];
      continue;
    }
    for (int j = 0; j < nt; ++j) {
      GraphNode& node = rep.nodes[c * nt + j];
      node.in_U = true;
      const double dv = std::sqrt(node.dv1.squaredNorm() + node.dv2.squaredNorm());
      rep.sup_v = std::max(rep.sup_v, std::pow(r, -a) * node.v_hat.norm());
      rep.sup_dv = std::max(rep.sup_dv, std::pow(r, 1.0 - a) * dv);
      rep.graph_integral += cell * (node.v_hat.norm_sq() + r * r * dv * dv);
      const Vec p1 = phi.cover_value(r, j * dth);
      const UnorderedPair rec(p1 + node.v_hat.a1, -p1 + node.v_hat.a2);
      rep.reconstruction_error = std::max(rep.reconstruction_error, metric_g(u.eval(node.x), rec));
    }
  }
  rep.excess = excess(u, phi, fr.origin, 1.0, default_fit_level(n));
  rep.integral_ratio = rep.excess > 0.0 ? (rep.graph_integral + rep.complement_integral) / rep.excess
                                        : std::numeric_limits<double>::infinity();
  rep.symmetric_U = true;
  return rep;
}

std::vector<CorollaryRow> corollary_checks(const TwoValuedField& u, const CylindricalProfile& phi,
                                           const CorollaryParams& prm) {
  const int n = u.dim();
  const Frame fr = phi.frame();
  const double a = phi.alpha();
  const Vec Z = prm.Z.size() == n ? prm.Z : Vec::Zero(n);
  const double rhs = excess(u, phi, fr.origin, 1.0, prm.level);
  auto ratio = [](double l, double r) { return r > 0.0 ? l / r : std::numeric_limits<double>::quiet_NaN(); };
  std::vector<CorollaryRow> rows;
  {
    const QuadratureRule rule = ball_rule(n, fr, prm.gamma, prm.level);
    const double lhs = rule.integrate([&](const QuadPoint& p) {
      return std::pow(p.R, -n + prm.sigma - 2.0 * a) * metric_g_sq(u.eval(p.x), phi.eval(p.x));
    });
    std::ostringstream ps;
    ps << "gamma=" << prm.gamma << ";sigma=" << prm.sigma;
    rows.push_back({"radial_weighted_excess", lhs, rhs, ratio(lhs, rhs), ps.str()});
  }
  {
    const Vec local = phi.Q() * (Z - phi.center());
    const double dist2 = local[0] * local[0] + local[1] * local[1];
    const CylindricalProfile shifted = phi.with_center(phi.center() + Z);
    const double lhs = dist2 + excess(u, shifted, fr.origin, 1.0, prm.level);
    std::ostringstream ps;
    ps << "Z=";
    for (int d = 0; d < n; ++d) ps << (d ? " " : "") << Z[d];
    rows.push_back({"translated_excess", lhs, rhs, ratio(lhs, rhs), ps.str()});
  }
  {
    const QuadratureRule rule = ball_rule(n, fr, 0.5, prm.level);
    const double lhs = rule.integrate([&](const QuadPoint& p) {
      const double rd = std::max(p.r, prm.delta);
      return metric_g_sq(u.eval(p.x), phi.eval(p.x)) / std::pow(rd, 1.0 - prm.sigma);
    });
    std::ostringstream ps;
    ps << "delta=" << prm.delta << ";sigma=" << prm.sigma;
    rows.push_back({"axis_weighted_excess", lhs, rhs, ratio(lhs, rhs), ps.str()});
  }
  return rows;
}

}  // namespace branchlab
