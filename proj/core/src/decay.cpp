#include "branchlab/decay.hpp"

#include "branchlab/parallel.hpp"
#include "branchlab/polynomial.hpp"
#include "branchlab/sampled_field.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace branchlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Square {
  double x0, y0, size;
};

std::vector<Vec> square_loop(const Square& s, int n, const Vec& slice) {
  std::vector<Vec> loop(4, slice);
  const double xs[4] = {s.x0, s.x0 + s.size, s.x0 + s.size, s.x0};
  const double ys[4] = {s.y0, s.y0, s.y0 + s.size, s.y0 + s.size};
  for (int c = 0; c < 4; ++c) {
    loop[c].resize(n);
    loop[c][0] = xs[c];
    loop[c][1] = ys[c];
  }
  return loop;
}

// Bisection on sub-squares with odd holonomy; appends the centers of the final squares.
void refine(const TwoValuedField& us, const Square& s, int n, const Vec& slice, int depth, std::vector<Vec>& out,
            std::vector<char>& confident) {
  if (depth == 0) {
    Vec x = slice;
    x[0] = s.x0 + 0.5 * s.size;
    x[1] = s.y0 + 0.5 * s.size;
    out.push_back(x);
    confident.push_back(1);
    return;
  }
  const double h = 0.5 * s.size;
  int found = 0;
  for (int q = 0; q < 4; ++q) {
    const Square sub{s.x0 + (q % 2) * h, s.y0 + (q / 2) * h, h};
    if (loop_holonomy(us, square_loop(sub, n, slice)) == -1) {
      refine(us, sub, n, slice, depth - 1, out, confident);
      ++found;
    }
  }
  if (found == 0) {
    // the point sits on a sub-square edge; keep the current square
    Vec x = slice;
    x[0] = s.x0 + h;
    x[1] = s.y0 + h;
    out.push_back(x);
    confident.push_back(0);
  }
}

double margin(const TwoValuedField& u, const Vec& x) {
  const double R = u.domain_radius();
  if (!std::isfinite(R)) return kInf;
  return R - (x - u.domain_center()).norm();
}

}  // namespace

UnorderedPair SymmetricPart::eval(const Vec& x) const { return decompose(base_->eval(x)).symmetric; }

Jet SymmetricPart::jet(const Vec& x) const {
  const Jet j = base_->jet(x);
  const Vec s = 0.5 * (j.value.a1 - j.value.a2);
  const Mat g = 0.5 * (j.grad1 - j.grad2);
  return {UnorderedPair(s, -s), g, -g};
}

int loop_holonomy(const TwoValuedField& u, const std::vector<Vec>& loop, int samples_per_edge) {
  const std::size_t corners = loop.size();
  if (corners < 3) throw InvalidInput("loop_holonomy: need at least three corners");
  if (samples_per_edge < 1) throw InvalidInput("loop_holonomy: samples_per_edge must be positive");
  // one selection of u_s with its derivative; the derivative carries the lift through
  // transversal zeros, where values alone cannot tell the sheets apart (m = 1)
  struct Sample {
    Vec x, v;
    Mat D;
  };
  auto sample = [&](const Vec& x) {
    Sample s{x, Vec(), Mat()};
    try {
      const Jet j = u.jet(x);
      s.v = 0.5 * (j.value.a1 - j.value.a2);
      s.D = 0.5 * (j.grad1 - j.grad2);
    } catch (const SingularEvaluation&) {
      s.v = decompose(u.eval(x)).symmetric.a1;
      s.D = Mat::Zero(s.v.size(), x.size());
    }
    return s;
  };
  auto negated = [](Sample s) {
    s.v = -s.v;
    s.D = -s.D;
    return s;
  };
  double hi = 0.0;
  bool undecided = false;
  std::function<void(Sample&, const Sample&, int)> advance = [&](Sample& cur, const Sample& b, int depth) {
    hi = std::max(hi, b.v.norm());
    const Vec pred = cur.v + cur.D * (b.x - cur.x);
    const double ep = (pred - b.v).norm(), em = (pred + b.v).norm();
    if (std::min(ep, em) <= 0.25 * std::max(ep, em) || depth == 0) {
      if (std::min(ep, em) > 0.25 * std::max(ep, em)) undecided = true;
      cur = ep <= em ? b : negated(b);
      return;
    }
    const Sample m = sample(0.5 * (cur.x + b.x));
    advance(cur, m, depth - 1);
    advance(cur, b, depth - 1);
  };
  const Sample s0 = sample(loop[0]);
  hi = s0.v.norm();
  Sample cur = s0;
  double step = 0.0;
  for (std::size_t c = 0; c < corners; ++c) {
    const Vec& a = loop[c];
    const Vec& b = loop[(c + 1) % corners];
    step = std::max(step, (b - a).norm() / samples_per_edge);
    for (int s = 1; s <= samples_per_edge; ++s) {
      const double t = static_cast<double>(s) / samples_per_edge;
      advance(cur, (c + 1 == corners && s == samples_per_edge) ? s0 : sample((1.0 - t) * a + t * b), 24);
    }
  }
  if (hi == 0.0 || undecided) return 0;
  // compare first-order data so a start point on a zero of u_s still decides
  const double same = (cur.v - s0.v).norm() + step * (cur.D - s0.D).norm();
  const double flip = (cur.v + s0.v).norm() + step * (cur.D + s0.D).norm();
  if (same <= 1e-6 * flip) return 1;
  if (flip <= 1e-6 * same) return -1;
  return 0;
}

SingularReport detect_branch_set(const FieldPtr& u, const DetectOptions& opt) {
  if (!u) throw InvalidInput("detect_branch_set: null field");
  const int n = u->dim();
  if (n < 2 || n > 3) throw InvalidInput("detect_branch_set: n must be 2 or 3");
  const Vec center = opt.center.size() == n ? opt.center : Vec::Zero(n);
  const auto us = std::make_shared<SymmetricPart>(u);
  const int N = opt.cells;
  const double h = 2.0 * opt.half_width / N;
  // a fixed irrational offset keeps lattice lines off symmetric points
  const double x0 = center[0] - opt.half_width + 0.0137 * h;
  const double y0 = center[1] - opt.half_width + 0.0071 * h;
  int L = 1;
  double dz = 0.0;
  if (n == 3) {
    L = opt.slices > 0 ? opt.slices : std::max(1, N / 2);
    dz = 2.0 * opt.axial_half_width / L;
  }
  SingularReport rep;
  rep.cell_size = h;
  rep.slice_spacing = dz;
  const std::size_t cells = static_cast<std::size_t>(N) * N * L;
  std::vector<std::vector<Vec>> found(cells);
  std::vector<std::vector<char>> conf(cells);
  parallel_for(cells, [&](std::size_t idx) {
    const int l = static_cast<int>(idx / (static_cast<std::size_t>(N) * N));
    const int rem = static_cast<int>(idx % (static_cast<std::size_t>(N) * N));
    const int i = rem % N, j = rem / N;
    Vec slice = Vec::Zero(n);
    if (n == 3) slice[2] = center[2] - opt.axial_half_width + (l + 0.5) * dz;
    const Square sq{x0 + i * h, y0 + j * h, h};
    if (loop_holonomy(*us, square_loop(sq, n, slice)) == -1)
      refine(*us, sq, n, slice, opt.refine_depth, found[idx], conf[idx]);
  });
  for (std::size_t idx = 0; idx < cells; ++idx)
    for (std::size_t q = 0; q < found[idx].size(); ++q) {
      const Vec& x = found[idx][q];
      bool dup = false;
      for (const auto& c : rep.candidates) dup = dup || (c.x - x).norm() < 0.25 * h;
      if (dup) continue;
      BranchCandidate c;
      c.x = x;
      c.kind = CandidateKind::branch;
      c.branch_evidence = true;
      c.low_confidence = !conf[idx][q];
      c.symmetric_norm = us->eval(x).a1.norm();
      rep.candidates.push_back(c);
    }
  // touching candidates: local minima of |u|^2 + h^2 |Du|^2 with u_s and Du_s negligible
  {
    const int M = N + 1;
    const std::size_t nodes = static_cast<std::size_t>(M) * M * L;
    std::vector<double> T(nodes, kInf), su(nodes, kInf), sdu(nodes, kInf);
    std::vector<double> scale(nodes, 0.0);
    parallel_for(nodes, [&](std::size_t idx) {
      const int l = static_cast<int>(idx / (static_cast<std::size_t>(M) * M));
      const int rem = static_cast<int>(idx % (static_cast<std::size_t>(M) * M));
      Vec x = Vec::Zero(n);
      x[0] = x0 + (rem % M) * h;
      x[1] = y0 + (rem / M) * h;
      if (n == 3) x[2] = center[2] - opt.axial_half_width + (l + 0.5) * dz;
      if (margin(*u, x) <= 0.0) return;
      try {
        const Jet j = u->jet(x);
        T[idx] = j.value.norm_sq() + h * h * j.grad_norm_sq();
        su[idx] = 0.5 * (j.value.a1 - j.value.a2).norm();
        sdu[idx] = 0.5 * (j.grad1 - j.grad2).norm();
        scale[idx] = std::sqrt(j.grad_norm_sq());
      } catch (const SingularEvaluation&) {
      }
    });
    double S = 0.0;
    for (double s : scale) S = std::max(S, s);
    const double S2 = S / std::max(opt.half_width, 1e-300);
    const double tau = opt.touch_tolerance > 0.0 ? opt.touch_tolerance : 4.0 * (h + u->resolution()) * S2 + 1e-14 * S;
    for (int l = 0; l < L; ++l)
      for (int jy = 1; jy + 1 < M; ++jy)
        for (int ix = 1; ix + 1 < M; ++ix) {
          const std::size_t idx = (static_cast<std::size_t>(l) * M + jy) * M + ix;
          if (!std::isfinite(T[idx]) || sdu[idx] > tau || su[idx] > tau * h) continue;
          if (T[idx] > (tau * h) * (tau * h) + tau * tau * h * h) continue;
          bool minimum = true;
          for (int dy = -1; dy <= 1 && minimum; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
              if (!dx && !dy) continue;
              const std::size_t o = (static_cast<std::size_t>(l) * M + jy + dy) * M + ix + dx;
              if (T[o] < T[idx]) {
                minimum = false;
                break;
              }
            }
          if (!minimum) continue;
          Vec x = Vec::Zero(n);
          x[0] = x0 + ix * h;
          x[1] = y0 + jy * h;
          if (n == 3) x[2] = center[2] - opt.axial_half_width + (l + 0.5) * dz;
          bool near_branch = false;
          for (const auto& c : rep.candidates) near_branch = near_branch || (c.x - x).norm() < 1.5 * h;
          if (near_branch) continue;
          BranchCandidate c;
          c.x = x;
          c.kind = CandidateKind::touching;
          c.symmetric_norm = su[idx];
          const Square around{x[0] - 0.5 * h, x[1] - 0.5 * h, h};
          c.branch_evidence = loop_holonomy(*us, square_loop(around, n, x)) == -1;
          rep.candidates.push_back(c);
        }
  }
  if (opt.estimate_frequency) {
    const std::size_t nc = rep.candidates.size();
    parallel_for(nc, [&](std::size_t q) {
      BranchCandidate& c = rep.candidates[q];
      double rho = opt.frequency_radius;
      for (std::size_t o = 0; o < nc; ++o)
        if (o != q && rep.candidates[o].kind == CandidateKind::branch)
          rho = std::min(rho, 0.4 * (rep.candidates[o].x - c.x).norm());
      rho = std::min(rho, 0.9 * margin(*u, c.x));
      if (!(rho > 0.0)) {
        c.low_confidence = true;
        return;
      }
      try {
        const TwoValuedField& f = c.kind == CandidateKind::branch ? static_cast<const TwoValuedField&>(*us) : *u;
        const PointFrequency pf = frequency_at_point(f, c.x, rho, 6, opt.frequency_level);
        c.frequency = pf.estimate;
        c.uncertainty = pf.uncertainty;
        c.low_confidence = c.low_confidence || pf.low_confidence;
      } catch (const Error&) {
        c.low_confidence = true;
      }
    });
    std::vector<BranchCandidate> kept;
    for (auto& c : rep.candidates) {
      if (c.kind == CandidateKind::branch && !c.low_confidence &&
          c.frequency < opt.min_frequency - opt.frequency_tolerance) {
        ++rep.discarded_low_frequency;
        continue;
      }
      kept.push_back(c);
    }
    rep.candidates = std::move(kept);
  }
  if (n == 2) {
    for (std::size_t a = 0; a < rep.candidates.size(); ++a)
      for (std::size_t b = a + 1; b < rep.candidates.size(); ++b)
        if (rep.candidates[a].kind == CandidateKind::branch && rep.candidates[b].kind == CandidateKind::branch &&
            (rep.candidates[a].x - rep.candidates[b].x).norm() <= 2.0 * h)
          rep.isolated = false;
  } else {
    rep.isolated = false;
  }
  return rep;
}

std::optional<Vec> gap_probe(const SingularReport& report, double delta0, double alpha, int n) {
  if (!(delta0 > 0.0)) throw InvalidInput("gap_probe: delta0 must be positive");
  std::vector<Vec> high;
  for (const auto& c : report.candidates)
    if (c.frequency >= alpha - 3.0 * c.uncertainty - 1e-6) high.push_back(c.x);
  auto free_at = [&](const Vec& y0) {
    Vec p = Vec::Zero(n);
    for (int d = 2; d < n; ++d) p[d] = y0[d - 2];
    for (const Vec& x : high)
      if ((x - p).norm() < delta0) return false;
    return true;
  };
  if (n == 2) {
    if (free_at(Vec::Zero(0))) return Vec::Zero(0);
    return std::nullopt;
  }
  if (n != 3) throw InvalidInput("gap_probe: n must be 2 or 3");
  const int steps = static_cast<int>(std::ceil(1.0 / (0.25 * delta0)));
  for (int s = 0; s <= steps; ++s) {
    Vec y0(1);
    y0[0] = -0.5 + static_cast<double>(s) / steps;
    if (free_at(y0)) return y0;
  }
  return std::nullopt;
}

DecayStepResult decay_step(const FieldPtr& u, const CylindricalProfile& phi_prev, double theta,
                           const FitOptions& fit) {
  if (!(theta > 0.0 && theta < 0.25)) throw InvalidInput("decay_step: theta must lie in (0, 1/4)");
  const int n = u->dim();
  const double a = phi_prev.alpha();
  const QuadLevel level = fit.quad_level >= 0 ? QuadLevel::at(fit.quad_level) : default_fit_level(n);
  const Vec origin = Vec::Zero(n);
  DecayStepResult out{phi_prev, 0.0, 0.0, 0.0};
  out.excess_before = excess(*u, phi_prev, origin, 1.0, level);
  const auto scaled = std::make_shared<ScaledField>(u, origin, theta, std::pow(theta, -a));
  const FitProfileResult fr = fit_profile(*scaled, phi_prev, fit);
  out.profile = fr.profile;
  out.excess_after = excess(*scaled, out.profile, origin, 1.0, level);
  // an excess at roundoff level relative to |u|^2 counts as exact
  const double floor = 1e-24 * ball_l2(*u, Frame::at(origin), 1.0, level);
  out.ratio = out.excess_before > floor ? out.excess_after / out.excess_before : 0.0;
  return out;
}

std::string to_string(StepOutcome outcome) {
  switch (outcome) {
    case StepOutcome::decay: return "decay";
    case StepOutcome::gap: return "gap";
    case StepOutcome::fit_failure: return "fit_failure";
    case StepOutcome::truncated: return "truncated";
  }
  return "unknown";
}

double middle_slope(const std::vector<double>& x, const std::vector<double>& y, double* intercept) {
  const std::size_t N = x.size();
  if (N != y.size() || N < 2) throw InvalidInput("middle_slope: need at least two points");
  std::size_t lo = N / 6, hi = N - N / 6;
  if (hi - lo < 2) {
    lo = 0;
    hi = N;
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double cnt = static_cast<double>(hi - lo);
  for (std::size_t i = lo; i < hi; ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double den = cnt * sxx - sx * sx;
  if (den == 0.0) throw InvalidInput("middle_slope: degenerate abscissae");
  const double slope = (cnt * sxy - sx * sy) / den;
  if (intercept) *intercept = (sy - slope * sx) / cnt;
  return slope;
}

DecayRun iterate(const FieldPtr& u, const Vec& Z, const CylindricalProfile& guess, const DecayOptions& opt) {
  const int n = u->dim();
  if (Z.size() != n) throw InvalidInput("iterate: center dimension mismatch");
  if (!(opt.theta > 0.0 && opt.theta < 0.25)) throw InvalidInput("iterate: theta must lie in (0, 1/4)");
  const double a = guess.alpha();
  const double delta0 = opt.delta0 > 0.0 ? opt.delta0 : 0.5 * opt.theta;
  const double eps0 = opt.eps0 > 0.0 ? opt.eps0 : 0.05;
  const QuadLevel level = opt.fit.quad_level >= 0 ? QuadLevel::at(opt.fit.quad_level) : default_fit_level(n);
  const Vec origin = Vec::Zero(n);
  DecayRun run{Z, opt.theta, {}, guess, 0.0, 0.0, false, false, ""};
  auto field_at = [&](int j) -> FieldPtr {
    const double s = std::pow(opt.theta, j);
    return std::make_shared<ScaledField>(u, Z, s, std::pow(s, -a));
  };
  // the probe only needs the delta0-neighbourhood of the axis segment it scans
  DetectOptions det = opt.detect;
  det.center = Vec::Zero(n);
  det.half_width = std::min(det.half_width, 1.5 * delta0);
  det.cells = std::max(8, det.cells / 4);
  det.frequency_level = QuadLevel::at(2);
  if (n == 3) {
    det.axial_half_width = std::min(det.axial_half_width, 0.5 + delta0);
    if (det.slices == 0) det.slices = static_cast<int>(std::ceil(2.0 * det.axial_half_width / (0.5 * delta0)));
  }
  auto probe = [&](const FieldPtr& f) -> std::optional<Vec> {
    if (!opt.probe_gaps) return std::nullopt;
    return gap_probe(detect_branch_set(f, det), delta0, a, n);
  };

  FieldPtr u0 = field_at(0);
  DecayRecord first(guess);
  first.j = 0;
  first.scale = 1.0;
  try {
    first.profile = fit_profile(*u0, guess, opt.fit).profile;
  } catch (const Error& e) {
    first.profile = guess;
    first.outcome = StepOutcome::fit_failure;
    run.steps.push_back(first);
    run.stop_reason = std::string("initial fit failed: ") + e.what();
    return run;
  }
  first.excess = excess(*u0, first.profile, origin, 1.0, level);
  const double phi_norm = ball_rule(n, Frame::identity(n), 1.0, level).integrate([&](const QuadPoint& p) {
    return first.profile.eval(p.x).norm_sq();
  });
  run.steps.push_back(first);
  if (first.excess > eps0 * phi_norm) {
    run.stop_reason = "initial excess above the threshold";
    run.limit = first.profile;
    return run;
  }
  for (int j = 0; j < opt.j_max; ++j) {
    const FieldPtr uj = field_at(j);
    const double next_scale = std::pow(opt.theta, j + 1);
    const double res = u->resolution();
    DecayRecord rec(run.steps.back().profile);
    rec.j = j + 1;
    rec.scale = next_scale;
    if (res > 0.0 && next_scale < 4.0 * res) {
      rec.outcome = StepOutcome::truncated;
      run.truncated = true;
      run.stop_reason = "scale below the field resolution";
      break;
    }
    if (auto w = probe(uj)) {
      rec.outcome = StepOutcome::gap;
      rec.gap_witness = *w;
      run.steps.push_back(rec);
      run.stop_reason = "gap witness found";
      break;
    }
    try {
      const DecayStepResult st = decay_step(uj, run.steps.back().profile, opt.theta, opt.fit);
      rec.profile = st.profile;
      rec.excess = st.excess_after;
      rec.ratio = st.ratio;
      rec.drift = excess(run.steps.back().profile, st.profile, origin, 1.0, level);
    } catch (const Error& e) {
      rec.outcome = StepOutcome::fit_failure;
      run.steps.push_back(rec);
      run.stop_reason = std::string("fit failed: ") + e.what();
      break;
    }
    run.steps.push_back(rec);
  }
  if (run.stop_reason.empty()) run.stop_reason = "j_max reached";
  run.limit = run.steps.back().profile;
  run.pure_decay = run.steps.size() > 1;
  for (std::size_t i = 1; i < run.steps.size(); ++i)
    run.pure_decay = run.pure_decay && run.steps[i].outcome == StepOutcome::decay;
  std::vector<double> lx, ly;
  bool all_zero = true;
  for (const auto& s : run.steps) {
    if (s.outcome != StepOutcome::decay) continue;
    if (s.excess > 0.0) {
      all_zero = false;
      lx.push_back(std::log(s.scale));
      ly.push_back(std::log(s.excess));
    }
  }
  if (all_zero) {
    run.two_mu = kInf;
    run.constant = 0.0;
  } else if (lx.size() >= 2) {
    double b = 0.0;
    run.two_mu = middle_slope(lx, ly, &b);
    run.constant = std::exp(b);
  }
  return run;
}

TangentResult tangent_expansion(const FieldPtr& u, const Vec& Z, const DecayRun& run, const TangentOptions& opt) {
  const int n = u->dim(), m = u->codim();
  const CylindricalProfile& phi = run.limit;
  TangentResult out;
  out.k = phi.k();
  out.c = phi.c();
  out.Q = phi.Q();
  if (phi.c().norm() <= 1e-12) {
    out.branch_point = false;
    return out;
  }
  const auto uz = std::make_shared<ScaledField>(u, Z, 1.0, 1.0);
  // harmonic fit of the average on B_1
  const std::vector<VectorPolynomial> basis = harmonic_basis(n, opt.average_degree);
  const int P = static_cast<int>(basis.size());
  const QuadratureRule rule = ball_rule(n, Frame::identity(n), 1.0, QuadLevel::at(3));
  const Eigen::VectorXd acc = rule.integrate_vec(P * P + P * m + m, [&](const QuadPoint& p, Eigen::VectorXd& v) {
    const Vec avg = decompose(uz->eval(p.x)).average;
    Eigen::VectorXd b(P);
    for (int i = 0; i < P; ++i) b[i] = basis[i].eval(p.x)[0];
    for (int i = 0; i < P; ++i)
      for (int k = 0; k < P; ++k) v[i * P + k] = b[i] * b[k];
    for (int i = 0; i < P; ++i)
      for (int q = 0; q < m; ++q) v[P * P + i * m + q] = b[i] * avg[q];
    for (int q = 0; q < m; ++q) v[P * P + P * m + q] = avg[q] * avg[q];
  });
  const Eigen::MatrixXd G = Eigen::Map<const Eigen::MatrixXd>(acc.data(), P, P);
  Eigen::MatrixXd rhs(P, m);
  for (int i = 0; i < P; ++i)
    for (int q = 0; q < m; ++q) rhs(i, q) = acc[P * P + i * m + q];
  const Eigen::MatrixXd coef = G.ldlt().solve(rhs);
  double avg_sq = 0.0;
  for (int q = 0; q < m; ++q) avg_sq += acc[P * P + P * m + q];
  out.average_residual = std::sqrt(std::max(0.0, avg_sq - (coef.transpose() * rhs).trace()));
  auto h = [basis, coef, m, P](const Vec& x) {
    Vec v = Vec::Zero(m);
    for (int i = 0; i < P; ++i) v += basis[i].eval(x)[0] * coef.row(i).transpose();
    return v;
  };
  auto dh = [basis, coef, m, n, P](const Vec& x) {
    Mat g = Mat::Zero(m, n);
    for (int i = 0; i < P; ++i) g += coef.row(i).transpose() * basis[i].gradient(x).row(0);
    return g;
  };
  const ShiftedField eps_field(uz, h, dh);
  std::vector<double> ls, ll, lsup;
  double biggest = 0.0;
  for (int i = 0; i < opt.scales; ++i) {
    const double sigma = std::pow(0.5, i);
    const QuadratureRule r = ball_rule(n, phi.frame(), sigma, opt.level);
    std::vector<double> ring_sup(r.rings().size(), 0.0);
    const double l2 = r.integrate([&](const QuadPoint& p) {
      return metric_g_sq(eps_field.eval(p.x), phi.eval(p.x));
    });
    r.for_each_ring([&](std::size_t k) {
      for (int j = 0; j < r.n_theta(); ++j) {
        const QuadPoint p = r.point(k, j);
        ring_sup[k] = std::max(ring_sup[k], metric_g_sq(eps_field.eval(p.x), phi.eval(p.x)));
      }
    });
    ErrorTableRow row;
    row.sigma = sigma;
    row.l2 = std::pow(sigma, -n) * l2;
    row.sup = *std::max_element(ring_sup.begin(), ring_sup.end());
    biggest = std::max(biggest, row.l2);
    out.table.push_back(row);
  }
  const double floor = 1e-26 * std::max(1.0, phi.c().squaredNorm());
  out.exact = biggest <= floor;
  if (out.exact) {
    out.gamma = kInf;
    return out;
  }
  std::vector<double> x, y, ysup;
  for (const auto& row : out.table) {
    if (row.l2 <= floor || row.sup <= floor) continue;
    x.push_back(std::log(row.sigma));
    y.push_back(std::log(row.l2));
    ysup.push_back(std::log(row.sup));
  }
  if (x.size() >= 2) {
    double b = 0.0;
    out.l2_slope = middle_slope(x, y, &b);
    out.constant = std::exp(b);
    out.sup_slope = middle_slope(x, ysup);
    out.gamma = out.l2_slope - out.k;
  }
  return out;
}

TranslatedFrequencyReport translated_frequency_check(const TwoValuedField& u, const Vec& X1, double alpha,
                                                     double eps, double domain_radius, int count, double rho_min,
                                                     const QuadLevel& level) {
  const double rho_max = domain_radius - X1.norm() - 1.0;
  if (!(rho_max > rho_min)) throw InvalidInput("translated_frequency_check: domain too small for the requested radii");
  if (count < 2) throw InvalidInput("translated_frequency_check: need at least two radii");
  TranslatedFrequencyReport out;
  out.bound = eps * eps;
  for (int i = 0; i < count; ++i)
    out.radii.push_back(rho_min * std::pow(rho_max / rho_min, static_cast<double>(i) / (count - 1)));
  const FrequencyProfile prof = frequency_profile(u, X1, out.radii, level);
  out.N = prof.N;
  out.max_excess = -kInf;
  out.min_excess = kInf;
  for (double N : out.N) {
    out.max_excess = std::max(out.max_excess, N - alpha);
    out.min_excess = std::min(out.min_excess, N - alpha);
  }
  out.within_bound = out.max_excess < out.bound;
  out.nondecreasing = check_monotonicity(prof, 1e-8).pass();
  return out;
}

SingularReport stratify(const FieldPtr& u, SingularReport report, const StratifyOptions& opt) {
  const int n = u->dim();
  const auto us = std::make_shared<SymmetricPart>(u);
  parallel_for(report.candidates.size(), [&](std::size_t q) {
    BranchCandidate& c = report.candidates[q];
    try {
      const FieldPtr blow = normalized_rescale(us, c.x, opt.blowup_radius, opt.level);
      const double N0 = frequency_at_point(*blow, Vec::Zero(n), 0.25, 4, opt.level).estimate;
      int invariant = 0;
      bool ambiguous = false;
      for (int d = 0; d < n; ++d) {
        bool same[2];
        for (int s = 0; s < 2; ++s) {
          Vec xi = Vec::Zero(n);
          xi[d] = s == 0 ? opt.probe_distance : -opt.probe_distance;
          double Nd = -1.0;
          try {
            Nd = frequency_at_point(*blow, xi, 0.25, 4, opt.level).estimate;
          } catch (const DegenerateHeight&) {
          }
          same[s] = std::abs(Nd - N0) <= opt.tolerance;
        }
        if (same[0] && same[1]) ++invariant;
        if (same[0] != same[1]) ambiguous = true;
      }
      c.stratum = invariant;
      c.ambiguous = ambiguous;
    } catch (const Error&) {
      c.stratum = -1;
      c.ambiguous = true;
    }
  });
  return report;
}

}  // namespace branchlab
