#pragma once

// Common interface for two-valued fields on balls in R^n with values in
// A_2(R^m), plus wrappers for translated/scaled views.

#include "branchlab/pairspace.hpp"

#include <functional>
#include <limits>
#include <memory>

namespace branchlab {

/// Value and derivative of the two selections; grad1 belongs to value.a1.
struct Jet {
  UnorderedPair value;
  Mat grad1;  // m x n
  Mat grad2;  // m x n

  double grad_norm_sq() const { return grad1.squaredNorm() + grad2.squaredNorm(); }
};

class TwoValuedField {
 public:
  virtual ~TwoValuedField() = default;

  virtual int dim() const = 0;    // n
  virtual int codim() const = 0;  // m

  virtual UnorderedPair eval(const Vec& x) const = 0;
  virtual Jet jet(const Vec& x) const = 0;

  /// Domain ball; analytic fields report an infinite radius.
  virtual Vec domain_center() const { return Vec::Zero(dim()); }
  virtual double domain_radius() const { return std::numeric_limits<double>::infinity(); }

  /// Finest sample spacing for sampled fields, 0 for analytic fields.
  virtual double resolution() const { return 0.0; }

  bool contains_ball(const Vec& center, double radius, double slack = 1e-12) const;
};

using FieldPtr = std::shared_ptr<const TwoValuedField>;

/// X -> factor * u(center + scale * X).
class ScaledField : public TwoValuedField {
 public:
  ScaledField(FieldPtr base, Vec center, double scale, double factor);

  int dim() const override { return base_->dim(); }
  int codim() const override { return base_->codim(); }
  UnorderedPair eval(const Vec& x) const override;
  Jet jet(const Vec& x) const override;
  Vec domain_center() const override;
  double domain_radius() const override;
  double resolution() const override;

  const FieldPtr& base() const { return base_; }
  const Vec& center() const { return center_; }
  double scale() const { return scale_; }
  double factor() const { return factor_; }

 private:
  FieldPtr base_;
  Vec center_;
  double scale_;
  double factor_;
};

/// u - h for a single-valued polynomial h (the average removal in tangent analysis).
class ShiftedField : public TwoValuedField {
 public:
  ShiftedField(FieldPtr base, std::function<Vec(const Vec&)> h, std::function<Mat(const Vec&)> dh);

  int dim() const override { return base_->dim(); }
  int codim() const override { return base_->codim(); }
  UnorderedPair eval(const Vec& x) const override;
  Jet jet(const Vec& x) const override;
  Vec domain_center() const override { return base_->domain_center(); }
  double domain_radius() const override { return base_->domain_radius(); }
  double resolution() const override { return base_->resolution(); }

 private:
  FieldPtr base_;
  std::function<Vec(const Vec&)> h_;
  std::function<Mat(const Vec&)> dh_;
};

}  // namespace branchlab
