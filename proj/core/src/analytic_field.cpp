#include "branchlab/analytic_field.hpp"

#include <cmath>

namespace branchlab {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

bool is_half_integer_multiple(double v) { return std::abs(2.0 * v - std::round(2.0 * v)) < 1e-12; }

Vec re(const CVec& c, Complex z) {
  Vec out(c.size());
  for (int k = 0; k < c.size(); ++k) out[k] = std::real(c[k] * z);
  return out;
}

}  // namespace

std::string to_string(FieldKind kind) {
  switch (kind) {
    case FieldKind::cylindrical_power: return "cylindrical-power";
    case FieldKind::power_sum: return "power-sum";
    case FieldKind::branch_polynomial: return "branch-polynomial";
    case FieldKind::custom: return "custom-average-plus-symmetric";
  }
  return "unknown";
}

bool TwoValuedField::contains_ball(const Vec& center, double radius, double slack) const {
  double R = domain_radius();
  if (!std::isfinite(R)) return true;
  return (center - domain_center()).norm() + radius <= R * (1.0 + slack);
}

ScaledField::ScaledField(FieldPtr base, Vec center, double scale, double factor)
    : base_(std::move(base)), center_(std::move(center)), scale_(scale), factor_(factor) {
  if (!base_) throw InvalidInput("ScaledField: null base");
  if (center_.size() != base_->dim()) throw InvalidInput("ScaledField: center dimension");
  if (!(scale_ > 0.0)) throw InvalidInput("ScaledField: scale must be positive");
}

UnorderedPair ScaledField::eval(const Vec& x) const {
  UnorderedPair p = base_->eval(center_ + scale_ * x);
  return {factor_ * p.a1, factor_ * p.a2};
}

Jet ScaledField::jet(const Vec& x) const {
  Jet j = base_->jet(center_ + scale_ * x);
  j.value.a1 *= factor_;
  j.value.a2 *= factor_;
  j.grad1 *= factor_ * scale_;
  j.grad2 *= factor_ * scale_;
  return j;
}

Vec ScaledField::domain_center() const { return (base_->domain_center() - center_) / scale_; }
double ScaledField::domain_radius() const { return base_->domain_radius() / scale_; }
double ScaledField::resolution() const { return base_->resolution() / scale_; }

ShiftedField::ShiftedField(FieldPtr base, std::function<Vec(const Vec&)> h, std::function<Mat(const Vec&)> dh)
    : base_(std::move(base)), h_(std::move(h)), dh_(std::move(dh)) {}

UnorderedPair ShiftedField::eval(const Vec& x) const {
  UnorderedPair p = base_->eval(x);
  Vec hv = h_(x);
  return {p.a1 - hv, p.a2 - hv};
}

Jet ShiftedField::jet(const Vec& x) const {
  Jet j = base_->jet(x);
  Vec hv = h_(x);
  Mat dh = dh_(x);
  j.value.a1 -= hv;
  j.value.a2 -= hv;
  j.grad1 -= dh;
  j.grad2 -= dh;
  return j;
}

AnalyticTwoValuedField::AnalyticTwoValuedField(int n, int m, FieldKind kind, Symmetric symmetric,
                                               VectorPolynomial average)
    : n_(n), m_(m), kind_(kind), symmetric_(std::move(symmetric)), average_(std::move(average)) {
  if (n < 2 || n > kMaxDim) throw InvalidInput("analytic field: n must be in [2, 4]");
  if (m < 1 || m > kMaxDim) throw InvalidInput("analytic field: m must be in [1, 4]");
  if (average_.dim() == 0) average_ = VectorPolynomial(n, m);
  if (average_.dim() != n || average_.codim() != m) throw InvalidInput("analytic field: average has wrong shape");
  if (auto* modes = std::get_if<std::vector<AngularMode>>(&symmetric_)) {
    if (modes->empty()) throw InvalidInput("analytic field: empty mode list");
    int parity = -1;
    for (const auto& md : *modes) {
      if (md.c.size() != m) throw InvalidInput("analytic field: coefficient dimension differs from m");
      if (!is_half_integer_multiple(md.omega)) throw InvalidInput("analytic field: angular frequency must be in Z/2");
      if (md.beta < 0.0) throw InvalidInput("analytic field: negative radial degree");
      int p = static_cast<int>(std::lround(2.0 * md.omega)) & 1;
      if (parity >= 0 && p != parity)
        throw InvalidInput("analytic field: mixed parity of 2*omega makes the pair branch-dependent");
      parity = p;
    }
  } else if (auto* bp = std::get_if<BranchPolynomialPart>(&symmetric_)) {
    if (bp->c.size() != m) throw InvalidInput("analytic field: coefficient dimension differs from m");
    if (bp->roots.empty()) throw InvalidInput("analytic field: branch polynomial needs roots");
  } else if (auto* cp = std::get_if<CappedBranchPart>(&symmetric_)) {
    if (cp->c.size() != m) throw InvalidInput("analytic field: coefficient dimension differs from m");
    if (n < 3) throw InvalidInput("analytic field: capped branch needs n >= 3");
  }
}

void AnalyticTwoValuedField::symmetric_jet(const Vec& x, Vec& s, Mat& ds, bool want_grad) const {
  s = Vec::Zero(m_);
  if (want_grad) ds = Mat::Zero(m_, n_);
  const double x1 = x[0], x2 = x[1];
  if (const auto* modes = std::get_if<std::vector<AngularMode>>(&symmetric_)) {
    const double r = std::hypot(x1, x2);
    const double th = std::atan2(x2, x1);
    Vec dr = Vec::Zero(m_), dth = Vec::Zero(m_);
    for (const auto& md : *modes) {
      Complex e = std::polar(1.0, md.omega * th);
      Vec cosine = re(md.c, e);
      if (r == 0.0) {
        if (md.beta == 0.0) s += cosine;
      } else {
        s += std::pow(r, md.beta) * cosine;
      }
      if (!want_grad) continue;
      if (r == 0.0) {
        if (md.beta < 1.0 || (md.beta == 1.0 && md.omega != 1.0))
          throw SingularEvaluation("gradient requested on the axis of a non-C1 mode");
        if (md.beta == 1.0) {
          for (int k = 0; k < m_; ++k) {
            ds(k, 0) += std::real(md.c[k]);
            ds(k, 1) += -std::imag(md.c[k]);
          }
        }
        continue;
      }
      dr += md.beta * std::pow(r, md.beta - 1.0) * cosine;
      dth += std::pow(r, md.beta) * re(md.c, Complex(0.0, md.omega) * e);
    }
    if (want_grad && r > 0.0) {
      const double ct = x1 / r, st = x2 / r;
      ds.col(0) += ct * dr - st / r * dth;
      ds.col(1) += st * dr + ct / r * dth;
    }
  } else if (const auto* bp = std::get_if<BranchPolynomialPart>(&symmetric_)) {
    const Complex z(x1, x2);
    Complex P = bp->lead;
    for (const auto& rt : bp->roots) P *= (z - rt);
    const Complex g = std::sqrt(P);
    s = re(bp->c, g);
    if (want_grad) {
      if (g == Complex(0.0, 0.0)) throw SingularEvaluation("gradient requested at a zero of the branch polynomial");
      Complex dP(0.0, 0.0);
      for (std::size_t i = 0; i < bp->roots.size(); ++i) {
        Complex term = bp->lead;
        for (std::size_t j = 0; j < bp->roots.size(); ++j)
          if (j != i) term *= (z - bp->roots[j]);
        dP += term;
      }
      const Complex dg = dP / (2.0 * g);
      ds.col(0) = re(bp->c, dg);
      ds.col(1) = re(bp->c, Complex(0.0, 1.0) * dg);
    }
  } else if (const auto* cp = std::get_if<CappedBranchPart>(&symmetric_)) {
    const Complex z(x1, x2);
    const double over = x[2] - cp->y_cap;
    const double q = over > 0.0 ? cp->slope * over : 0.0;
    const Complex w = std::sqrt(z);
    s = re(cp->c, w * (z - q));
    if (want_grad) {
      if (w == Complex(0.0, 0.0)) throw SingularEvaluation("gradient requested on the axis of a capped branch field");
      const Complex fz = (3.0 * z - q) / (2.0 * w);
      ds.col(0) = re(cp->c, fz);
      ds.col(1) = re(cp->c, Complex(0.0, 1.0) * fz);
      if (over > 0.0) ds.col(2) = re(cp->c, -cp->slope * w);
    }
  }
}

Vec AnalyticTwoValuedField::symmetric_value(const Vec& x) const {
  if (x.size() != n_) throw InvalidInput("eval: point dimension differs from n");
  Vec s;
  Mat ds;
  symmetric_jet(x, s, ds, false);
  return s;
}

UnorderedPair AnalyticTwoValuedField::eval(const Vec& x) const {
  Vec s = symmetric_value(x);
  if (average_.empty()) return {s, -s};
  Vec h = average_.eval(x);
  return {h + s, h - s};
}

Jet AnalyticTwoValuedField::jet(const Vec& x) const {
  if (x.size() != n_) throw InvalidInput("jet: point dimension differs from n");
  Vec s;
  Mat ds;
  symmetric_jet(x, s, ds, true);
  Jet j;
  if (average_.empty()) {
    j.value = {s, -s};
    j.grad1 = ds;
    j.grad2 = -ds;
    return j;
  }
  Vec h = average_.eval(x);
  Mat dh = average_.gradient(x);
  j.value = {h + s, h - s};
  j.grad1 = dh + ds;
  j.grad2 = dh - ds;
  return j;
}

AnalyticTwoValuedField AnalyticTwoValuedField::with_average(const VectorPolynomial& h) const {
  return AnalyticTwoValuedField(n_, m_, kind_ == FieldKind::cylindrical_power && !h.empty() ? FieldKind::custom : kind_,
                                symmetric_, h);
}

AnalyticTwoValuedField AnalyticTwoValuedField::scaled(double factor) const {
  Symmetric sym = symmetric_;
  if (auto* modes = std::get_if<std::vector<AngularMode>>(&sym)) {
    for (auto& md : *modes) md.c *= factor;
  } else if (auto* bp = std::get_if<BranchPolynomialPart>(&sym)) {
    bp->c *= factor;
  } else if (auto* cp = std::get_if<CappedBranchPart>(&sym)) {
    cp->c *= factor;
  }
  VectorPolynomial avg(n_, m_);
  for (const auto& t : average_.terms()) avg.add(t.exponent, factor * t.coeff);
  return AnalyticTwoValuedField(n_, m_, kind_, sym, avg);
}

AnalyticTwoValuedField cylindrical(int n, const CVec& c, int k) {
  if (k < 1) throw InvalidInput("cylindrical: k must be positive");
  return AnalyticTwoValuedField(n, static_cast<int>(c.size()), FieldKind::cylindrical_power,
                                std::vector<AngularMode>{{0.5 * k, 0.5 * k, c}}, VectorPolynomial());
}

AnalyticTwoValuedField power_sum(int n, const std::vector<PowerTerm>& terms) {
  if (terms.empty()) throw InvalidInput("power_sum: no terms");
  std::vector<AngularMode> modes;
  for (const auto& t : terms) {
    if (t.k < 1) throw InvalidInput("power_sum: k must be positive");
    modes.push_back({0.5 * t.k, 0.5 * t.k, t.c});
  }
  return AnalyticTwoValuedField(n, static_cast<int>(terms.front().c.size()), FieldKind::power_sum, modes,
                                VectorPolynomial());
}

AnalyticTwoValuedField branch_polynomial(int n, const CVec& c, const std::vector<Complex>& roots, Complex lead) {
  return AnalyticTwoValuedField(n, static_cast<int>(c.size()), FieldKind::branch_polynomial,
                                BranchPolynomialPart{c, lead, roots}, VectorPolynomial());
}

AnalyticTwoValuedField angular_modes(int n, const std::vector<AngularMode>& modes) {
  if (modes.empty()) throw InvalidInput("angular_modes: no modes");
  return AnalyticTwoValuedField(n, static_cast<int>(modes.front().c.size()), FieldKind::custom, modes,
                                VectorPolynomial());
}

AnalyticTwoValuedField capped_branch(int n, const CVec& c, double slope, double y_cap) {
  return AnalyticTwoValuedField(n, static_cast<int>(c.size()), FieldKind::custom, CappedBranchPart{c, slope, y_cap},
                                VectorPolynomial());
}

AnalyticTwoValuedField single_valued(int n, const VectorPolynomial& h) {
  return AnalyticTwoValuedField(n, h.codim(), FieldKind::custom, std::monostate{}, h);
}

CVec make_cvec(std::initializer_list<Complex> values) {
  CVec c(static_cast<int>(values.size()));
  int i = 0;
  for (auto v : values) c[i++] = v;
  return c;
}

}  // namespace branchlab
