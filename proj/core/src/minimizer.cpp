#include "branchlab/minimizer.hpp"

#include "branchlab/parallel.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>

#include <cmath>
#include <limits>

namespace branchlab {

namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;

// Signs making a sampled sequence of symmetric representatives continuous,
// using linear extrapolation from the two previous lifted values.
std::vector<Vec> lift_sequence(const std::vector<Vec>& raw) {
  std::vector<Vec> out(raw.size());
  for (std::size_t k = 0; k < raw.size(); ++k) {
    if (k == 0) {
      out[k] = raw[k];
      continue;
    }
    Vec pred = k >= 2 ? Vec(2.0 * out[k - 1] - out[k - 2]) : out[k - 1];
    out[k] = (pred - raw[k]).squaredNorm() <= (pred + raw[k]).squaredNorm() ? raw[k] : Vec(-raw[k]);
  }
  return out;
}

Vec symmetric_rep(const TwoValuedField& u, const Vec& x) { return decompose(u.eval(x)).symmetric.a1; }

struct Edge {
  std::size_t a, b;  // node indices
  double w;
  int sigma;
};

std::vector<Edge> edges_of(const CoverField& cf) {
  const CoverGrid& g = cf.grid();
  const int nr = g.n_radial, nt = g.n_theta;
  const double p = g.grading, ds = 1.0 / nr, dth = 2.0 * kPi / nt;
  std::vector<Edge> e;
  e.reserve(static_cast<std::size_t>(2 * nr * nt + nt));
  for (int j = 0; j < nt; ++j) e.push_back({0, cf.index(1, j), dth / (2.0 * p), 1});
  for (int i = 1; i <= nr; ++i) {
    const double s = i * ds;
    const double dual = i < nr ? ds : 0.5 * ds;
    const double wa = (p / s) * dual / dth;
    for (int j = 0; j < nt; ++j) e.push_back({cf.index(i, j), cf.index(i, (j + 1) % nt), wa, cf.angular_sign(i, j)});
    if (i < nr) {
      const double wr = ((i + 0.5) * ds / p) * dth / ds;
      for (int j = 0; j < nt; ++j) e.push_back({cf.index(i, j), cf.index(i + 1, j), wr, 1});
    }
  }
  return e;
}

}  // namespace

PolarGrid CoverGrid::polar() const {
  PolarGrid p;
  p.center = Vec::Zero(2);
  p.radius = radius;
  p.n_radial = n_radial;
  p.n_theta = n_theta;
  p.grading = grading;
  return p;
}

int BoundaryTable::holonomy(double tol) const {
  const std::size_t K = values.size();
  if (K < 8 || K % 2 != 0) throw InvalidInput("boundary table: need an even number (>= 8) of samples");
  double plus = 0.0, minus = 0.0, scale = 0.0;
  for (std::size_t k = 0; k < K / 2; ++k) {
    plus += (values[k + K / 2] - values[k]).squaredNorm();
    minus += (values[k + K / 2] + values[k]).squaredNorm();
    scale += values[k].squaredNorm();
  }
  if (scale == 0.0) return 1;
  if (std::min(plus, minus) > tol * tol * scale)
    throw NotLiftable("boundary table: data is neither 2pi-periodic nor 2pi-antiperiodic on the cover");
  return plus <= minus ? 1 : -1;
}

Vec BoundaryTable::eval(double th) const {
  const int K = static_cast<int>(values.size());
  const double step = 4.0 * kPi / K;
  double t = std::fmod(th, 4.0 * kPi);
  if (t < 0.0) t += 4.0 * kPi;
  t /= step;
  const int i = static_cast<int>(std::floor(t));
  double w[4], dw[4];
  cubic_lagrange(t - (i - 1), w, dw);
  Vec out = Vec::Zero(codim());
  for (int k = 0; k < 4; ++k) out += w[k] * values[((i - 1 + k) % K + K) % K];
  return out;
}

BoundaryTable boundary_from_field(const TwoValuedField& u, double radius, int samples) {
  if (u.dim() != 2) throw InvalidInput("boundary_from_field: planar fields only");
  if (samples < 8 || samples % 2 != 0) throw InvalidInput("boundary_from_field: need an even sample count >= 8");
  if (!u.contains_ball(Vec::Zero(2), radius)) throw InvalidInput("boundary_from_field: circle outside domain");
  BoundaryTable t;
  std::vector<Vec> raw(samples);
  t.theta.resize(samples);
  parallel_for(samples, [&](std::size_t k) {
    const double th = 4.0 * kPi * static_cast<double>(k) / samples;
    t.theta[k] = th;
    Vec x(2);
    x << radius * std::cos(th), radius * std::sin(th);
    raw[k] = symmetric_rep(u, x);
  });
  t.values = lift_sequence(raw);
  return t;
}

CoverField::CoverField(CoverGrid grid, BranchConfiguration config, int codim)
    : grid_(grid), config_(std::move(config)), m_(codim) {
  if (grid_.n_radial < 3 || grid_.n_theta < 4 || !(grid_.radius > 0.0) || !(grid_.grading >= 1.0))
    throw InvalidInput("cover grid: bad parameters");
  if (m_ < 1) throw InvalidInput("cover field: codim must be positive");
  if (config_.points.size() > 2) throw InvalidInput("branch configuration: at most two branch points");
  for (const auto& p : config_.points) {
    if (p.size() != 2) throw InvalidInput("branch configuration: points must be planar");
    if (!(p.norm() < grid_.radius)) throw InvalidInput("branch configuration: point outside the disk");
  }
  if (config_.points.size() == 2 && (config_.points[0] - config_.points[1]).norm() == 0.0)
    throw InvalidInput("branch configuration: points must be distinct");
  values_.assign(1 + static_cast<std::size_t>(grid_.n_radial) * grid_.n_theta, Vec::Zero(m_));
  build_signs();
}

void CoverField::build_signs() {
  const int nr = grid_.n_radial, nt = grid_.n_theta;
  angular_sign_.assign(values_.size(), 1);
  center_fixed_ = false;
  if (!branch_active_) return;
  const double dth = 2.0 * kPi / nt;
  for (const auto& p : config_.points) {
    const double rc = p.norm();
    if (rc <= 1e-12 * grid_.radius) {
      center_fixed_ = true;
      for (int i = 1; i <= nr; ++i) angular_sign_[index(i, nt - 1)] *= -1;
      continue;
    }
    double th = std::atan2(p[1], p[0]);
    if (th <= 0.0) th += 2.0 * kPi;  // th in (0, 2 pi]
    int j = static_cast<int>(std::ceil(th / dth - 1e-12)) - 1;
    j = std::clamp(j, 0, nt - 1);
    const double s = grid_.radius;
    for (int i = 1; i <= nr; ++i) {
      const double r = s * std::pow(static_cast<double>(i) / nr, grid_.grading);
      if (r > rc) angular_sign_[index(i, j)] *= -1;
    }
  }
}

std::size_t CoverField::index(int i, int j) const {
  return 1 + static_cast<std::size_t>(i - 1) * grid_.n_theta + static_cast<std::size_t>(j);
}

int CoverField::angular_sign(int i, int j) const { return angular_sign_[index(i, j)]; }

int CoverField::ring_holonomy(int i) const {
  int h = 1;
  for (int j = 0; j < grid_.n_theta; ++j) h *= angular_sign(i, j);
  return h;
}

Vec CoverField::cover_value(int i, int j_cover) const {
  const int nt = grid_.n_theta;
  if (j_cover < 0 || j_cover >= 2 * nt) throw InvalidInput("cover_value: index outside [0, 2 N_theta)");
  if (i == 0) return values_[0];
  const int j = j_cover % nt;
  int S = 1;
  for (int q = 0; q < j; ++q) S *= angular_sign(i, q);
  if (j_cover >= nt) S *= ring_holonomy(i);
  return S * values_[index(i, j)];
}

double CoverField::anti_periodicity_defect() const {
  double d = 0.0;
  for (int i = 1; i <= grid_.n_radial; ++i) {
    const int h = ring_holonomy(i);
    for (int j = 0; j < grid_.n_theta; ++j)
      d = std::max(d, (cover_value(i, j + grid_.n_theta) - h * cover_value(i, j)).norm());
  }
  return d;
}

double CoverField::energy() const {
  double e = 0.0;
  for (const Edge& ed : edges_of(*this)) e += ed.w * (values_[ed.a] - ed.sigma * values_[ed.b]).squaredNorm();
  return 2.0 * e;
}

SampledField CoverField::to_two_valued() const {
  std::vector<UnorderedPair> vals(values_.size());
  std::vector<std::uint8_t> flags(values_.size(), 0);
  for (std::size_t k = 0; k < values_.size(); ++k) vals[k] = UnorderedPair::symmetric(values_[k]);
  for (std::size_t k = 1; k < values_.size(); ++k)
    if (angular_sign_[k] < 0) flags[k] |= kFlipAngular;
  return SampledField(m_, grid_.polar(), std::move(vals), std::move(flags), true);
}

CoverField CoverField::from_field(const TwoValuedField& u, const CoverGrid& grid, const BranchConfiguration& config) {
  if (u.dim() != 2) throw InvalidInput("CoverField::from_field: planar fields only");
  CoverField cf(grid, config, u.codim());
  const int nr = grid.n_radial, nt = grid.n_theta;
  const PolarGrid pg = grid.polar();
  auto pos = [&](int i, int j) {
    Vec x(2);
    x << pg.r(i) * std::cos(pg.theta(j)), pg.r(i) * std::sin(pg.theta(j));
    return x;
  };
  std::vector<std::vector<Vec>> rings(nr + 1);
  parallel_for(nr, [&](std::size_t q) {
    const int i = static_cast<int>(q) + 1;
    std::vector<Vec> raw(nt);
    for (int j = 0; j < nt; ++j) raw[j] = symmetric_rep(u, pos(i, j));
    rings[i] = lift_sequence(raw);
  });
  for (int i = 1; i <= nr; ++i) {
    // stored = S_j * lift_j with S following the edge signs
    int S = 1;
    for (int j = 0; j < nt; ++j) {
      cf.values_[cf.index(i, j)] = S * rings[i][j];
      S *= cf.angular_sign(i, j);
    }
    if (i >= 2) {
      const Vec& a = cf.values_[cf.index(i - 1, 0)];
      Vec pred = i >= 3 ? Vec(2.0 * a - cf.values_[cf.index(i - 2, 0)]) : a;
      const Vec& cur = cf.values_[cf.index(i, 0)];
      if ((pred + cur).squaredNorm() < (pred - cur).squaredNorm())
        for (int j = 0; j < nt; ++j) cf.values_[cf.index(i, j)] = -cf.values_[cf.index(i, j)];
    }
  }
  if (cf.center_fixed_) {
    cf.values_[0] = Vec::Zero(u.codim());
  } else {
    Vec c = symmetric_rep(u, Vec::Zero(2));
    double corr = 0.0;
    for (int j = 0; j < nt; ++j) corr += c.dot(cf.values_[cf.index(1, j)]);
    cf.values_[0] = corr >= 0.0 ? c : Vec(-c);
  }
  return cf;
}

CoverField solve_branched_laplace(const BoundaryTable& boundary, const CoverGrid& grid,
                                  const BranchConfiguration& config, double tolerance) {
  const int m = boundary.codim();
  if (m < 1) throw InvalidInput("solve_branched_laplace: empty boundary table");
  const int h = boundary.holonomy();
  CoverField cf(grid, config, m);
  const int nr = grid.n_radial, nt = grid.n_theta;
  if (cf.ring_holonomy(nr) != h) {
    const bool center_only = config.points.size() == 1 && config.points[0].norm() <= 1e-12 * grid.radius;
    if (center_only && h == 1) {
      cf.branch_active_ = false;
      cf.build_signs();
    } else {
      throw NotLiftable("solve_branched_laplace: boundary holonomy " + std::to_string(h) +
                        " does not match the branch configuration");
    }
  }
  // boundary ring
  {
    int S = 1;
    for (int j = 0; j < nt; ++j) {
      cf.values_[cf.index(nr, j)] = S * boundary.eval(2.0 * kPi * j / nt);
      S *= cf.angular_sign(nr, j);
    }
  }
  // unknown numbering: center (if free), then rings 1..nr-1
  const std::size_t total = cf.values_.size();
  std::vector<long> unknown(total, -1);
  long count = 0;
  if (!cf.center_fixed_) unknown[0] = count++;
  for (int i = 1; i < nr; ++i)
    for (int j = 0; j < nt; ++j) unknown[cf.index(i, j)] = count++;
  if (cf.center_fixed_) cf.values_[0] = Vec::Zero(m);

  std::vector<Eigen::Triplet<double>> trip;
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(count, m);
  for (const Edge& e : edges_of(cf)) {
    const long ua = unknown[e.a], ub = unknown[e.b];
    if (ua >= 0) trip.emplace_back(ua, ua, e.w);
    if (ub >= 0) trip.emplace_back(ub, ub, e.w);
    if (ua >= 0 && ub >= 0) {
      trip.emplace_back(ua, ub, -e.sigma * e.w);
      trip.emplace_back(ub, ua, -e.sigma * e.w);
    } else if (ua >= 0) {
      rhs.row(ua) += e.sigma * e.w * cf.values_[e.b].transpose();
    } else if (ub >= 0) {
      rhs.row(ub) += e.sigma * e.w * cf.values_[e.a].transpose();
    }
  }
  Eigen::SparseMatrix<double> A(count, count);
  A.setFromTriplets(trip.begin(), trip.end());
  Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper> cg;
  cg.setTolerance(tolerance);
  cg.setMaxIterations(static_cast<Eigen::Index>(std::max<long>(1000, 20 * count)));
  cg.compute(A);
  int iters = 0;
  double worst = 0.0;
  Eigen::MatrixXd sol(count, m);
  for (int c = 0; c < m; ++c) {
    if (rhs.col(c).squaredNorm() == 0.0) {
      sol.col(c).setZero();
      continue;
    }
    sol.col(c) = cg.solve(rhs.col(c));
    iters = std::max<int>(iters, static_cast<int>(cg.iterations()));
    worst = std::max(worst, cg.error());
    if (cg.info() != Eigen::Success)
      throw SolverFailure("solve_branched_laplace: conjugate gradient did not converge", cg.error());
  }
  cf.iterations_ = iters;
  cf.residual_ = worst;
  for (std::size_t k = 0; k < total; ++k)
    if (unknown[k] >= 0) cf.values_[k] = sol.row(unknown[k]).transpose();
  return cf;
}

BranchSearchResult optimize_branch_points(const BoundaryTable& boundary, const CoverGrid& grid,
                                          const BranchConfiguration& initial, const BranchSearchOptions& opt) {
  const double R = grid.radius;
  auto admissible = [&](const BranchConfiguration& c) {
    for (const auto& p : c.points)
      if (!(p.norm() < 0.98 * R)) return false;
    if (c.points.size() == 2 && (c.points[0] - c.points[1]).norm() < opt.min_separation * R) return false;
    return true;
  };
  if (!admissible(initial)) throw InvalidInput("optimize_branch_points: initial configuration not admissible");
  BranchSearchResult res{initial, solve_branched_laplace(boundary, grid, initial), 0.0, {}, 1, false, 0.0};
  res.energy = res.field.energy();
  res.energy_trace.push_back(res.energy);
  double step = opt.initial_step * R;
  while (step >= opt.min_step * R && res.solves < opt.max_solves) {
    std::vector<BranchConfiguration> cands;
    for (std::size_t k = 0; k < res.config.points.size(); ++k)
      for (int d = 0; d < 2; ++d)
        for (int sgn : {1, -1}) {
          BranchConfiguration c = res.config;
          c.points[k][d] += sgn * step;
          if (admissible(c)) cands.push_back(c);
        }
    if (cands.empty()) {
      step *= 0.5;
      continue;
    }
    std::vector<double> energies(cands.size(), std::numeric_limits<double>::infinity());
    parallel_for(cands.size(), [&](std::size_t q) {
      try {
        energies[q] = solve_branched_laplace(boundary, grid, cands[q]).energy();
      } catch (const NotLiftable&) {
      }
    });
    res.solves += static_cast<int>(cands.size());
    std::size_t best = 0;
    for (std::size_t q = 1; q < cands.size(); ++q)
      if (energies[q] < energies[best]) best = q;
    if (energies[best] < res.energy * (1.0 - 1e-12)) {
      res.config = cands[best];
      res.energy = energies[best];
      res.energy_trace.push_back(res.energy);
    } else {
      step *= 0.5;
    }
  }
  res.field = solve_branched_laplace(boundary, grid, res.config);
  res.unbranched_energy = std::numeric_limits<double>::quiet_NaN();
  if (boundary.holonomy() == 1) {
    res.unbranched_energy = solve_branched_laplace(boundary, grid, BranchConfiguration{}).energy();
    ++res.solves;
  }
  if (res.config.points.size() == 2 &&
      (res.config.points[0] - res.config.points[1]).norm() < 2.0 * opt.min_separation * R)
    res.degenerate = true;
  if (std::isfinite(res.unbranched_energy) && !res.config.points.empty() &&
      std::abs(res.energy - res.unbranched_energy) <= 1e-3 * std::max(res.unbranched_energy, 1e-300))
    res.degenerate = true;
  return res;
}

}  // namespace branchlab
