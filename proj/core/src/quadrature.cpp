#include "branchlab/quadrature.hpp"

#include "branchlab/parallel.hpp"

#include <boost/math/special_functions/legendre.hpp>

#include <cmath>
#include <map>
#include <mutex>

namespace branchlab {

namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;

struct GLTable {
  std::vector<double> x, w;
};

const GLTable& gl_table(int count) {
  static std::mutex mutex;
  static std::map<int, GLTable> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(count);
  if (it != cache.end()) return it->second;
  if (count < 1) throw InvalidInput("Gauss-Legendre: count must be positive");
  // Boost returns the non-negative zeros in ascending order.
  std::vector<double> pos = boost::math::legendre_p_zeros<double>(count);
  GLTable t;
  std::vector<double> xs;
  for (auto it2 = pos.rbegin(); it2 != pos.rend(); ++it2)
    if (*it2 != 0.0) xs.push_back(-*it2);
  for (double v : pos) xs.push_back(v);
  for (double x : xs) {
    double dp = boost::math::legendre_p_prime(count, x);
    t.x.push_back(x);
    t.w.push_back(2.0 / ((1.0 - x * x) * dp * dp));
  }
  return cache.emplace(count, std::move(t)).first->second;
}

// Gauss-Legendre on (a, b).
void gl_interval(int count, double a, double b, std::vector<double>& x, std::vector<double>& w) {
  const GLTable& t = gl_table(count);
  x.resize(count);
  w.resize(count);
  const double h = 0.5 * (b - a), c = 0.5 * (b + a);
  for (int i = 0; i < count; ++i) {
    x[i] = c + h * t.x[i];
    w[i] = h * t.w[i];
  }
}

struct Direction {
  double sin_phi;  // r / R
  Vec y_unit;      // y / R
  double weight;   // angular weight excluding the theta factor
};

// Angular directions of the sphere S^{n-1} grouped by ring.
std::vector<Direction> directions(int n, const QuadLevel& level) {
  std::vector<Direction> out;
  if (n == 2) {
    out.push_back({1.0, Vec::Zero(0), 1.0});
  } else if (n == 3) {
    std::vector<double> phi, w;
    gl_interval(level.polar, 0.0, kPi, phi, w);
    for (int i = 0; i < level.polar; ++i) {
      Vec y(1);
      y[0] = std::cos(phi[i]);
      out.push_back({std::sin(phi[i]), y, w[i] * std::sin(phi[i])});
    }
  } else if (n == 4) {
    std::vector<double> phi, w;
    gl_interval(level.polar, 0.0, 0.5 * kPi, phi, w);
    const int n_psi = std::max(4, level.angular / 2);
    for (int i = 0; i < level.polar; ++i) {
      for (int k = 0; k < n_psi; ++k) {
        const double psi = 2.0 * kPi * k / n_psi;
        Vec y(2);
        y[0] = std::cos(phi[i]) * std::cos(psi);
        y[1] = std::cos(phi[i]) * std::sin(psi);
        out.push_back({std::sin(phi[i]), y, w[i] * std::sin(phi[i]) * std::cos(phi[i]) * 2.0 * kPi / n_psi});
      }
    }
  } else {
    throw InvalidInput("quadrature: n must be 2, 3 or 4");
  }
  return out;
}

}  // namespace

std::vector<double> gauss_legendre_nodes(int count) { return gl_table(count).x; }
std::vector<double> gauss_legendre_weights(int count) { return gl_table(count).w; }

QuadLevel QuadLevel::at(int level) {
  QuadLevel q;
  const int f = 1 << std::max(0, level);
  q.radial = 4 * f;
  q.polar = 4 * f;
  q.angular = 8 * f;
  return q;
}

QuadLevel QuadLevel::refined() const {
  QuadLevel q = *this;
  q.radial *= 2;
  q.polar *= 2;
  q.angular *= 2;
  return q;
}

Frame Frame::identity(int n) { return {Vec::Zero(n), Mat::Identity(n, n)}; }

Frame Frame::at(const Vec& origin) { return {origin, Mat::Identity(origin.size(), origin.size())}; }

Vec Frame::to_global(const Vec& local) const { return origin + rotation * local; }

Vec Frame::to_local(const Vec& global) const { return rotation.transpose() * (global - origin); }

QuadratureRule::QuadratureRule(int n, Frame frame, std::vector<Ring> rings, int n_theta)
    : n_(n), frame_(std::move(frame)), rings_(std::move(rings)), n_theta_(n_theta) {}

double QuadratureRule::theta(int j) const { return 2.0 * kPi * j / n_theta_; }

Vec QuadratureRule::local_point(std::size_t ring, double th) const {
  const Ring& rg = rings_[ring];
  Vec local(n_);
  local[0] = rg.r * std::cos(th);
  local[1] = rg.r * std::sin(th);
  for (int i = 2; i < n_; ++i) local[i] = rg.y[i - 2];
  return local;
}

QuadPoint QuadratureRule::point(std::size_t ring, int j) const {
  QuadPoint p;
  const Ring& rg = rings_[ring];
  p.theta = theta(j);
  p.local = local_point(ring, p.theta);
  p.x = frame_.to_global(p.local);
  p.R = rg.R;
  p.r = rg.r;
  p.weight = rg.weight;
  return p;
}

double QuadratureRule::integrate(const std::function<double(const QuadPoint&)>& f) const {
  return parallel_sum(rings_.size(), [&](std::size_t i) {
    double s = 0.0;
    for (int j = 0; j < n_theta_; ++j) {
      QuadPoint p = point(i, j);
      s += p.weight * f(p);
    }
    return s;
  });
}

Eigen::VectorXd QuadratureRule::integrate_vec(int length,
                                              const std::function<void(const QuadPoint&, Eigen::VectorXd&)>& f) const {
  std::vector<Eigen::VectorXd> partial(rings_.size(), Eigen::VectorXd::Zero(length));
  parallel_for(rings_.size(), [&](std::size_t i) {
    Eigen::VectorXd buf(length);
    for (int j = 0; j < n_theta_; ++j) {
      QuadPoint p = point(i, j);
      buf.setZero();
      f(p, buf);
      partial[i] += p.weight * buf;
    }
  });
  Eigen::VectorXd total = Eigen::VectorXd::Zero(length);
  for (const auto& v : partial) total += v;
  return total;
}

void QuadratureRule::for_each_ring(const std::function<void(std::size_t)>& body) const {
  parallel_for(rings_.size(), body);
}

double QuadratureRule::total_weight() const {
  double s = 0.0;
  for (const auto& rg : rings_) s += rg.weight * n_theta_;
  return s;
}

QuadratureRule ball_rule(int n, const Frame& frame, double rho, const QuadLevel& level) {
  if (!(rho > 0.0)) throw InvalidInput("ball_rule: radius must be positive");
  const auto dirs = directions(n, level);
  std::vector<double> s, ws;
  gl_interval(level.radial, 0.0, 1.0, s, ws);
  const double p = level.grading;
  const double dtheta = 2.0 * kPi / level.angular;
  std::vector<Ring> rings;
  rings.reserve(s.size() * dirs.size());
  for (int i = 0; i < level.radial; ++i) {
    const double R = rho * std::pow(s[i], p);
    const double dR = ws[i] * rho * p * std::pow(s[i], p - 1.0);
    const double radial_w = dR * std::pow(R, n - 1);
    for (const auto& d : dirs) {
      rings.push_back({R, R * d.sin_phi, R * d.y_unit, radial_w * d.weight * dtheta});
    }
  }
  return QuadratureRule(n, frame, std::move(rings), level.angular);
}

QuadratureRule sphere_rule(int n, const Frame& frame, double rho, const QuadLevel& level) {
  if (!(rho > 0.0)) throw InvalidInput("sphere_rule: radius must be positive");
  const auto dirs = directions(n, level);
  const double dtheta = 2.0 * kPi / level.angular;
  std::vector<Ring> rings;
  const double area = std::pow(rho, n - 1);
  for (const auto& d : dirs) rings.push_back({rho, rho * d.sin_phi, rho * d.y_unit, area * d.weight * dtheta});
  return QuadratureRule(n, frame, std::move(rings), level.angular);
}

double unit_ball_volume(int n) {
  switch (n) {
    case 1: return 2.0;
    case 2: return kPi;
    case 3: return 4.0 * kPi / 3.0;
    case 4: return 0.5 * kPi * kPi;
  }
  throw InvalidInput("unit_ball_volume: unsupported n");
}

double unit_sphere_area(int n) { return n * unit_ball_volume(n); }

}  // namespace branchlab
