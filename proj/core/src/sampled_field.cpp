#include "branchlab/sampled_field.hpp"

#include "branchlab/parallel.hpp"

#include <charconv>
#include <cmath>
#include <deque>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace branchlab {

namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;

// Distance between ordered pairs; used to decide orientation.
double ordered_cost(const UnorderedPair& pred, const UnorderedPair& cand) {
  return (pred.a1 - cand.a1).squaredNorm() + (pred.a2 - cand.a2).squaredNorm();
}

bool prefers_swap(const UnorderedPair& pred, const UnorderedPair& cand) {
  return ordered_cost(pred, cand.swapped()) < ordered_cost(pred, cand);
}

UnorderedPair extrapolate(const UnorderedPair& a, const UnorderedPair& b) {
  // value one step beyond a, given the previous value b
  return {2.0 * a.a1 - b.a1, 2.0 * a.a2 - b.a2};
}

std::string fmt_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw InvalidInput("sampled field csv: bad number '" + s + "'");
  return v;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

void lattice_coords(const CartesianGrid& g, std::size_t idx, int* q) {
  for (int d = 0; d < g.n; ++d) {
    q[d] = static_cast<int>(idx % g.points);
    idx /= g.points;
  }
}

std::size_t lattice_index(const CartesianGrid& g, const int* q) {
  std::size_t idx = 0;
  for (int d = g.n - 1; d >= 0; --d) idx = idx * g.points + q[d];
  return idx;
}

std::size_t stride(const CartesianGrid& g, int d) {
  std::size_t s = 1;
  for (int i = 0; i < d; ++i) s *= g.points;
  return s;
}

}  // namespace

void cubic_lagrange(double t, double w[4], double dw[4]) {
  for (int k = 0; k < 4; ++k) {
    double num = 1.0, den = 1.0, dnum = 0.0;
    for (int l = 0; l < 4; ++l) {
      if (l == k) continue;
      den *= (k - l);
    }
    for (int l = 0; l < 4; ++l) {
      if (l == k) continue;
      num *= (t - l);
      double prod = 1.0;
      for (int q = 0; q < 4; ++q)
        if (q != k && q != l) prod *= (t - q);
      dnum += prod;
    }
    w[k] = num / den;
    dw[k] = dnum / den;
  }
}

std::size_t CartesianGrid::lattice_size() const {
  std::size_t s = 1;
  for (int d = 0; d < n; ++d) s *= points;
  return s;
}

double PolarGrid::r(int i) const { return radius * std::pow(s(i), grading); }

double PolarGrid::theta(int j) const { return 2.0 * kPi * j / n_theta; }

std::size_t PolarGrid::index(int i, int j) const {
  return 1 + static_cast<std::size_t>(i - 1) * n_theta + static_cast<std::size_t>(j);
}

SampledField::SampledField(int m, Grid grid, std::vector<UnorderedPair> values, std::vector<std::uint8_t> flags,
                           bool symmetric)
    : m_(m), grid_(std::move(grid)), values_(std::move(values)), flags_(std::move(flags)), symmetric_(symmetric) {
  if (auto* c = std::get_if<CartesianGrid>(&grid_)) {
    if (c->n < 2 || c->n > 3) throw InvalidInput("sampled field: Cartesian grids support n = 2, 3");
    if (c->points < 4) throw InvalidInput("sampled field: need at least 4 points per axis");
    if (c->center.size() != c->n) throw InvalidInput("sampled field: center dimension mismatch");
    n_ = c->n;
    if (values_.size() != c->lattice_size()) throw InvalidInput("sampled field: value count mismatch");
  } else {
    const auto& p = std::get<PolarGrid>(grid_);
    if (p.center.size() != 2) throw InvalidInput("sampled field: polar grids are planar");
    if (p.n_radial < 3 || p.n_theta < 4 || !(p.radius > 0.0) || !(p.grading >= 1.0))
      throw InvalidInput("sampled field: bad polar grid");
    n_ = 2;
    if (values_.size() != p.node_count()) throw InvalidInput("sampled field: value count mismatch");
  }
  if (flags_.size() != values_.size()) throw InvalidInput("sampled field: flag count mismatch");
  build_presence();
}

void SampledField::build_presence() {
  present_.assign(values_.size(), 1);
  if (auto* c = std::get_if<CartesianGrid>(&grid_)) {
    for (std::size_t i = 0; i < values_.size(); ++i)
      present_[i] = (node_position(i) - c->center).norm() < c->domain_radius ? 1 : 0;
  }
}

Vec SampledField::node_position(std::size_t node) const {
  if (auto* c = std::get_if<CartesianGrid>(&grid_)) {
    int q[4];
    lattice_coords(*c, node, q);
    Vec x(c->n);
    for (int d = 0; d < c->n; ++d) x[d] = c->center[d] - c->half_width + q[d] * c->spacing();
    return x;
  }
  const auto& p = std::get<PolarGrid>(grid_);
  if (node == 0) return p.center;
  const int i = 1 + static_cast<int>((node - 1) / p.n_theta);
  const int j = static_cast<int>((node - 1) % p.n_theta);
  Vec x(2);
  x[0] = p.center[0] + p.r(i) * std::cos(p.theta(j));
  x[1] = p.center[1] + p.r(i) * std::sin(p.theta(j));
  return x;
}

SampledField SampledField::sample(const TwoValuedField& u, const Grid& grid) {
  std::size_t count = 0;
  if (auto* c = std::get_if<CartesianGrid>(&grid)) {
    if (c->n != u.dim()) throw InvalidInput("sample: grid dimension mismatch");
    count = c->lattice_size();
  } else {
    if (u.dim() != 2) throw InvalidInput("sample: polar grids are planar");
    count = std::get<PolarGrid>(grid).node_count();
  }
  SampledField f(u.codim(), grid, std::vector<UnorderedPair>(count, UnorderedPair::zero(u.codim())),
                 std::vector<std::uint8_t>(count, 0), false);
  double declared = 0.0;
  Vec gc;
  if (auto* c = std::get_if<CartesianGrid>(&grid)) {
    declared = c->domain_radius;
    gc = c->center;
  } else {
    declared = std::get<PolarGrid>(grid).radius;
    gc = std::get<PolarGrid>(grid).center;
  }
  if (!u.contains_ball(gc, declared)) throw InvalidInput("sample: grid exceeds the field's domain");
  parallel_for(count, [&](std::size_t i) {
    if (f.present_[i]) f.values_[i] = u.eval(f.node_position(i));
  });
  double scale = 0.0, asym = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    if (!f.present_[i]) continue;
    scale = std::max(scale, f.values_[i].norm());
    asym = std::max(asym, (f.values_[i].a1 + f.values_[i].a2).norm());
  }
  f.symmetric_ = asym <= 1e-12 * std::max(scale, 1e-300);
  f.order_by_propagation();
  return f;
}

void SampledField::order_by_propagation() {
  if (std::holds_alternative<PolarGrid>(grid_))
    order_polar();
  else
    order_cartesian();
}

void SampledField::order_polar() {
  const auto& g = std::get<PolarGrid>(grid_);
  const int nr = g.n_radial, nt = g.n_theta;
  std::fill(flags_.begin(), flags_.end(), 0);
  // Lift each ring by predictive continuation in theta.
  for (int i = 1; i <= nr; ++i) {
    for (int j = 1; j < nt; ++j) {
      const UnorderedPair& prev = values_[g.index(i, j - 1)];
      UnorderedPair pred = j >= 2 ? extrapolate(prev, values_[g.index(i, j - 2)]) : prev;
      UnorderedPair& cur = values_[g.index(i, j)];
      if (prefers_swap(pred, cur)) cur = cur.swapped();
    }
    UnorderedPair pred = extrapolate(values_[g.index(i, nt - 1)], values_[g.index(i, nt - 2)]);
    if (prefers_swap(pred, values_[g.index(i, 0)])) flags_[g.index(i, nt - 1)] |= kFlipAngular;
  }
  // Orient whole rings against the inner neighbors, then flag radial seams.
  for (int i = 1; i <= nr; ++i) {
    // prediction in the stored frame of the inner node
    auto column_pred = [&](int j) {
      if (i == 1) return values_[0];
      const UnorderedPair& a = values_[g.index(i - 1, j)];
      if (i == 2) return a;
      UnorderedPair prev = values_[g.index(i - 2, j)];
      if (flags_[g.index(i - 1, j)] & kFlipRadial) prev = prev.swapped();
      return extrapolate(a, prev);
    };
    double keep = 0.0, swap = 0.0;
    for (int j = 0; j < nt; ++j) {
      UnorderedPair pr = column_pred(j);
      keep += ordered_cost(pr, values_[g.index(i, j)]);
      swap += ordered_cost(pr, values_[g.index(i, j)].swapped());
    }
    if (swap < keep)
      for (int j = 0; j < nt; ++j) values_[g.index(i, j)] = values_[g.index(i, j)].swapped();
    for (int j = 0; j < nt; ++j)
      if (prefers_swap(column_pred(j), values_[g.index(i, j)])) flags_[g.index(i, j)] |= kFlipRadial;
  }
}

void SampledField::order_cartesian() {
  const auto& g = std::get<CartesianGrid>(grid_);
  const std::size_t total = values_.size();
  std::fill(flags_.begin(), flags_.end(), 0);
  // Seed at the present node closest to the center.
  std::size_t seed = total;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < total; ++i) {
    if (!present_[i]) continue;
    double d = (node_position(i) - g.center).norm();
    if (d < best) {
      best = d;
      seed = i;
    }
  }
  if (seed == total) throw InvalidInput("sampled field: grid has no nodes inside the domain");
  std::vector<std::uint8_t> visited(total, 0);
  std::deque<std::size_t> queue{seed};
  visited[seed] = 1;
  while (!queue.empty()) {
    const std::size_t a = queue.front();
    queue.pop_front();
    int q[4];
    lattice_coords(g, a, q);
    for (int d = 0; d < g.n; ++d) {
      for (int dir : {-1, 1}) {
        const int nq = q[d] + dir;
        if (nq < 0 || nq >= g.points) continue;
        const std::size_t b = dir > 0 ? a + stride(g, d) : a - stride(g, d);
        if (!present_[b] || visited[b]) continue;
        UnorderedPair pred = values_[a];
        const int pq = q[d] - dir;
        if (pq >= 0 && pq < g.points) {
          const std::size_t p = dir > 0 ? a - stride(g, d) : a + stride(g, d);
          if (present_[p] && visited[p]) pred = extrapolate(values_[a], values_[p]);
        }
        if (prefers_swap(pred, values_[b])) values_[b] = values_[b].swapped();
        visited[b] = 1;
        queue.push_back(b);
      }
    }
  }
  for (std::size_t a = 0; a < total; ++a) {
    if (!present_[a]) continue;
    int q[4];
    lattice_coords(g, a, q);
    for (int d = 0; d < g.n; ++d) {
      if (q[d] + 1 >= g.points) continue;
      const std::size_t b = a + stride(g, d);
      if (!present_[b]) continue;
      UnorderedPair pred = values_[a];
      if (q[d] >= 1 && present_[a - stride(g, d)]) {
        // continue the stored order of the previous node, undoing its own flag
        UnorderedPair prev = values_[a - stride(g, d)];
        if (flags_[a - stride(g, d)] & (1u << d)) prev = prev.swapped();
        pred = extrapolate(values_[a], prev);
      }
      if (prefers_swap(pred, values_[b])) flags_[a] |= static_cast<std::uint8_t>(1u << d);
    }
  }
}

Vec SampledField::domain_center() const {
  if (auto* c = std::get_if<CartesianGrid>(&grid_)) return c->center;
  return std::get<PolarGrid>(grid_).center;
}

double SampledField::domain_radius() const {
  if (auto* c = std::get_if<CartesianGrid>(&grid_))
    return c->domain_radius - 2.0 * std::sqrt(static_cast<double>(c->n)) * c->spacing();
  return std::get<PolarGrid>(grid_).radius;
}

double SampledField::resolution() const {
  if (auto* c = std::get_if<CartesianGrid>(&grid_)) return c->spacing();
  const auto& p = std::get<PolarGrid>(grid_);
  return p.radius * std::pow(std::min(1.0, 4.0 / p.n_radial), p.grading);
}

UnorderedPair SampledField::eval(const Vec& x) const { return interpolate(x, false).value; }

Jet SampledField::jet(const Vec& x) const { return interpolate(x, true); }

Jet SampledField::interpolate(const Vec& x, bool want_grad) const {
  if (x.size() != n_) throw InvalidInput("sampled field: point dimension mismatch");
  if ((x - domain_center()).norm() > domain_radius() * (1.0 + 1e-12))
    throw InvalidInput("sampled field: point outside the sampled domain");
  if (auto* c = std::get_if<CartesianGrid>(&grid_)) return interpolate_cartesian(*c, x, want_grad);
  return interpolate_polar(std::get<PolarGrid>(grid_), x, want_grad);
}

Jet SampledField::interpolate_cartesian(const CartesianGrid& g, const Vec& x, bool want_grad) const {
  const double h = g.spacing();
  int base[3] = {0, 0, 0};
  double w[3][4], dw[3][4];
  for (int d = 0; d < g.n; ++d) {
    const double t = (x[d] - (g.center[d] - g.half_width)) / h;
    int b = static_cast<int>(std::floor(t)) - 1;
    b = std::clamp(b, 0, g.points - 4);
    base[d] = b;
    cubic_lagrange(t - b, w[d], dw[d]);
  }
  int ref[3] = {base[0] + 1, base[1] + 1, base[2] + 1};
  Jet out;
  out.value = UnorderedPair::zero(m_);
  out.grad1 = Mat::Zero(m_, n_);
  out.grad2 = Mat::Zero(m_, n_);
  const int corners = g.n == 2 ? 16 : 64;
  for (int k = 0; k < corners; ++k) {
    int off[3] = {k % 4, (k / 4) % 4, k / 16};
    int q[3] = {ref[0], ref[1], ref[2]};
    int parity = 0;
    // walk axis by axis from the reference node
    for (int d = 0; d < g.n; ++d) {
      const int target = base[d] + off[d];
      while (q[d] != target) {
        const int step = target > q[d] ? 1 : -1;
        int lo[3] = {q[0], q[1], q[2]};
        if (step < 0) lo[d] -= 1;
        const std::size_t li = lattice_index(g, lo);
        if (!present_[li] || !present_[li + stride(g, d)])
          throw InvalidInput("sampled field: interpolation stencil leaves the domain");
        parity ^= (flags_[li] >> d) & 1;
        q[d] += step;
      }
    }
    const std::size_t node = lattice_index(g, q);
    const UnorderedPair& v = values_[node];
    const Vec& s1 = parity ? v.a2 : v.a1;
    const Vec& s2 = parity ? v.a1 : v.a2;
    double weight = 1.0;
    for (int d = 0; d < g.n; ++d) weight *= w[d][off[d]];
    out.value.a1 += weight * s1;
    out.value.a2 += weight * s2;
    if (want_grad) {
      for (int d = 0; d < g.n; ++d) {
        double gw = dw[d][off[d]] / h;
        for (int e = 0; e < g.n; ++e)
          if (e != d) gw *= w[e][off[e]];
        out.grad1.col(d) += gw * s1;
        out.grad2.col(d) += gw * s2;
      }
    }
  }
  return out;
}

Jet SampledField::interpolate_polar(const PolarGrid& g, const Vec& x, bool want_grad) const {
  const double dx = x[0] - g.center[0], dy = x[1] - g.center[1];
  const double r = std::hypot(dx, dy);
  double th = std::atan2(dy, dx);
  if (th < 0.0) th += 2.0 * kPi;
  const double s = std::pow(std::min(r / g.radius, 1.0), 1.0 / g.grading);
  const double us = s * g.n_radial;
  int i0 = std::clamp(static_cast<int>(std::floor(us)) - 1, 0, g.n_radial - 3);
  const double dth = 2.0 * kPi / g.n_theta;
  const double vt = th / dth;
  const int j0 = static_cast<int>(std::floor(vt)) - 1;
  double ws[4], dws[4], wt[4], dwt[4];
  cubic_lagrange(us - i0, ws, dws);
  cubic_lagrange(vt - j0, wt, dwt);
  const int nt = g.n_theta;
  auto wrap = [nt](int j) { return ((j % nt) + nt) % nt; };
  const int iref = i0 + 1;
  const int jref = wrap(j0 + 1);

  Jet out;
  out.value = UnorderedPair::zero(m_);
  Vec gs1 = Vec::Zero(m_), gs2 = Vec::Zero(m_), gt1 = Vec::Zero(m_), gt2 = Vec::Zero(m_);
  for (int b = 0; b < 4; ++b) {
    // angular walk on ring iref from jref to the column
    int parity = 0;
    const int joff = b - 1;
    int j = jref;
    for (int step = 0; step < std::abs(joff); ++step) {
      if (joff > 0) {
        parity ^= flags_[g.index(iref, j)] & kFlipAngular;
        j = wrap(j + 1);
      } else {
        j = wrap(j - 1);
        parity ^= flags_[g.index(iref, j)] & kFlipAngular;
      }
    }
    for (int a = 0; a < 4; ++a) {
      const int i = i0 + a;
      int p = parity;
      if (i > iref) {
        for (int q = iref + 1; q <= i; ++q) p ^= (flags_[g.index(q, j)] & kFlipRadial) ? 1 : 0;
      } else {
        for (int q = iref; q > i; --q) p ^= (flags_[g.index(q, j)] & kFlipRadial) ? 1 : 0;
      }
      const UnorderedPair& v = i == 0 ? values_[0] : values_[g.index(i, j)];
      const Vec& s1 = p ? v.a2 : v.a1;
      const Vec& s2 = p ? v.a1 : v.a2;
      const double wgt = ws[a] * wt[b];
      out.value.a1 += wgt * s1;
      out.value.a2 += wgt * s2;
      if (want_grad) {
        gs1 += dws[a] * wt[b] * s1;
        gs2 += dws[a] * wt[b] * s2;
        gt1 += ws[a] * dwt[b] * s1;
        gt2 += ws[a] * dwt[b] * s2;
      }
    }
  }
  if (want_grad) {
    if (r <= 1e-12 * g.radius) throw SingularEvaluation("sampled field: gradient at the polar center");
    // d/dr = d/dus * dus/ds * ds/dr
    const double dus_dr = g.n_radial * s / (g.grading * r);
    const double c = dx / r, sn = dy / r;
    out.grad1 = Mat::Zero(m_, 2);
    out.grad2 = Mat::Zero(m_, 2);
    Vec dr1 = gs1 * dus_dr, dr2 = gs2 * dus_dr;
    Vec dq1 = gt1 / dth, dq2 = gt2 / dth;
    out.grad1.col(0) = c * dr1 - sn / r * dq1;
    out.grad1.col(1) = sn * dr1 + c / r * dq1;
    out.grad2.col(0) = c * dr2 - sn / r * dq2;
    out.grad2.col(1) = sn * dr2 + c / r * dq2;
  } else {
    out.grad1 = Mat::Zero(m_, 2);
    out.grad2 = Mat::Zero(m_, 2);
  }
  return out;
}

void SampledField::write_csv(std::ostream& os) const {
  os << "# branchlab sampled field\n";
  os << "n," << n_ << "\n";
  os << "m," << m_ << "\n";
  os << "symmetric," << (symmetric_ ? 1 : 0) << "\n";
  if (auto* c = std::get_if<CartesianGrid>(&grid_)) {
    os << "grid,cartesian";
    for (int d = 0; d < c->n; ++d) os << "," << fmt_double(c->center[d]);
    os << "," << fmt_double(c->half_width) << "," << c->points << "," << fmt_double(c->domain_radius) << "\n";
  } else {
    const auto& p = std::get<PolarGrid>(grid_);
    os << "grid,polar," << fmt_double(p.center[0]) << "," << fmt_double(p.center[1]) << "," << fmt_double(p.radius)
       << "," << p.n_radial << "," << p.n_theta << "," << fmt_double(p.grading) << "\n";
  }
  os << "columns,index";
  for (int d = 0; d < n_; ++d) os << ",x" << d + 1;
  for (int k = 0; k < m_; ++k) os << ",a1_" << k + 1;
  for (int k = 0; k < m_; ++k) os << ",a2_" << k + 1;
  os << ",flags\n";
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!present_[i]) continue;
    os << i;
    const Vec x = node_position(i);
    for (int d = 0; d < n_; ++d) os << "," << fmt_double(x[d]);
    for (int k = 0; k < m_; ++k) os << "," << fmt_double(values_[i].a1[k]);
    for (int k = 0; k < m_; ++k) os << "," << fmt_double(values_[i].a2[k]);
    os << "," << static_cast<int>(flags_[i]) << "\n";
  }
}

SampledField SampledField::read_csv(std::istream& is) {
  std::string line;
  int n = 0, m = 0;
  bool symmetric = false;
  Grid grid;
  bool have_grid = false;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    auto cells = split(line);
    if (cells[0] == "n") {
      n = std::stoi(cells.at(1));
    } else if (cells[0] == "m") {
      m = std::stoi(cells.at(1));
    } else if (cells[0] == "symmetric") {
      symmetric = cells.at(1) == "1";
    } else if (cells[0] == "grid") {
      if (cells.at(1) == "cartesian") {
        CartesianGrid c;
        c.n = n;
        c.center = Vec(n);
        for (int d = 0; d < n; ++d) c.center[d] = parse_double(cells.at(2 + d));
        c.half_width = parse_double(cells.at(2 + n));
        c.points = std::stoi(cells.at(3 + n));
        c.domain_radius = parse_double(cells.at(4 + n));
        grid = c;
      } else if (cells.at(1) == "polar") {
        PolarGrid p;
        p.center = Vec(2);
        p.center << parse_double(cells.at(2)), parse_double(cells.at(3));
        p.radius = parse_double(cells.at(4));
        p.n_radial = std::stoi(cells.at(5));
        p.n_theta = std::stoi(cells.at(6));
        p.grading = parse_double(cells.at(7));
        grid = p;
      } else {
        throw InvalidInput("sampled field csv: unknown grid type");
      }
      have_grid = true;
    } else if (cells[0] == "columns") {
      break;
    }
  }
  if (!have_grid || n < 2 || m < 1) throw InvalidInput("sampled field csv: incomplete header");
  std::size_t count = std::holds_alternative<CartesianGrid>(grid) ? std::get<CartesianGrid>(grid).lattice_size()
                                                                   : std::get<PolarGrid>(grid).node_count();
  std::vector<UnorderedPair> values(count, UnorderedPair::zero(m));
  std::vector<std::uint8_t> flags(count, 0);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto cells = split(line);
    if (static_cast<int>(cells.size()) != 2 + n + 2 * m) throw InvalidInput("sampled field csv: bad row");
    const std::size_t idx = std::stoull(cells[0]);
    if (idx >= count) throw InvalidInput("sampled field csv: node index out of range");
    UnorderedPair v = UnorderedPair::zero(m);
    for (int k = 0; k < m; ++k) v.a1[k] = parse_double(cells[1 + n + k]);
    for (int k = 0; k < m; ++k) v.a2[k] = parse_double(cells[1 + n + m + k]);
    values[idx] = v;
    flags[idx] = static_cast<std::uint8_t>(std::stoi(cells[1 + n + 2 * m]));
  }
  return SampledField(m, grid, std::move(values), std::move(flags), symmetric);
}

bool SampledField::identical(const SampledField& other) const {
  if (n_ != other.n_ || m_ != other.m_ || symmetric_ != other.symmetric_) return false;
  if (values_.size() != other.values_.size()) return false;
  if (grid_.index() != other.grid_.index()) return false;
  if (auto* c = std::get_if<CartesianGrid>(&grid_)) {
    const auto& o = std::get<CartesianGrid>(other.grid_);
    if (c->center != o.center || c->half_width != o.half_width || c->points != o.points ||
        c->domain_radius != o.domain_radius)
      return false;
  } else {
    const auto& p = std::get<PolarGrid>(grid_);
    const auto& o = std::get<PolarGrid>(other.grid_);
    if (p.center != o.center || p.radius != o.radius || p.n_radial != o.n_radial || p.n_theta != o.n_theta ||
        p.grading != o.grading)
      return false;
  }
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!present_[i]) continue;
    if (values_[i].a1 != other.values_[i].a1 || values_[i].a2 != other.values_[i].a2) return false;
    if (flags_[i] != other.flags_[i]) return false;
  }
  return true;
}

std::shared_ptr<ScaledField> normalized_rescale(const FieldPtr& u, const Vec& Y, double rho, const QuadLevel& level) {
  if (!(rho > 0.0)) throw InvalidInput("rescale: radius must be positive");
  if (Y.size() != u->dim()) throw InvalidInput("rescale: center dimension mismatch");
  if (!u->contains_ball(Y, rho)) throw InvalidInput("rescale: ball outside the field's domain");
  const int n = u->dim();
  QuadratureRule rule = ball_rule(n, Frame::at(Y), rho, level);
  const double mass = rule.integrate([&](const QuadPoint& p) { return u->eval(p.x).norm_sq(); });
  const double scale_mass = std::pow(rho, n);
  if (!(mass > 1e-300 * scale_mass) || !std::isfinite(mass))
    throw DegenerateRescale("rescale: field has zero L2 norm on the ball");
  const double factor = std::pow(rho, 0.5 * n) / std::sqrt(mass);
  return std::make_shared<ScaledField>(u, Y, rho, factor);
}

Grid default_unit_grid(int n) {
  if (n == 2) {
    PolarGrid p;
    p.center = Vec::Zero(2);
    p.radius = 1.0;
    p.n_radial = 64;
    p.n_theta = 128;
    p.grading = 2.0;
    return p;
  }
  if (n == 3) {
    CartesianGrid c;
    c.n = 3;
    c.center = Vec::Zero(3);
    c.points = 49;
    c.half_width = 1.2;
    c.domain_radius = 1.0 + 2.0 * std::sqrt(3.0) * c.spacing() + 1e-9;
    return c;
  }
  throw InvalidInput("sampled fields support n = 2, 3");
}

SampledField rescale(const FieldPtr& u, const Vec& Y, double rho, const Grid* grid, const QuadLevel& level) {
  Grid g = grid ? *grid : default_unit_grid(u->dim());
  auto view = normalized_rescale(u, Y, rho, level);
  return SampledField::sample(*view, g);
}

double l2_distance_sq(const TwoValuedField& u, const TwoValuedField& v, const Vec& center, double radius,
                      const QuadLevel& level) {
  if (u.dim() != v.dim() || u.codim() != v.codim()) throw InvalidInput("l2_distance_sq: field shape mismatch");
  if (!u.contains_ball(center, radius) || !v.contains_ball(center, radius))
    throw InvalidInput("l2_distance_sq: ball outside a domain");
  QuadratureRule rule = ball_rule(u.dim(), Frame::at(center), radius, level);
  return rule.integrate([&](const QuadPoint& p) { return metric_g_sq(u.eval(p.x), v.eval(p.x)); });
}

ConvergenceStudy l2_distance_sq_study(const TwoValuedField& u, const TwoValuedField& v, const Vec& center,
                                      double radius, int first_level, int last_level) {
  ConvergenceStudy st;
  for (int l = first_level; l <= last_level; ++l) {
    st.levels.push_back(l);
    st.values.push_back(l2_distance_sq(u, v, center, radius, QuadLevel::at(l)));
    if (st.values.size() >= 2) st.differences.push_back(std::abs(st.values.back() - st.values[st.values.size() - 2]));
  }
  st.observed_order = std::numeric_limits<double>::infinity();
  if (st.differences.size() >= 2) {
    const double a = st.differences[st.differences.size() - 2], b = st.differences.back();
    if (b > 0.0) st.observed_order = std::log2(a / b);
  }
  return st;
}

}  // namespace branchlab
