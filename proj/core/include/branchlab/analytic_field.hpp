#pragma once

// Closed-form two-valued fields: cylindrical powers, power sums, branch
// polynomials and a few hand-built families used as controls.

#include "branchlab/field.hpp"
#include "branchlab/polynomial.hpp"

#include <string>
#include <variant>
#include <vector>

namespace branchlab {

/// r^beta Re(c e^{i omega theta}) in the (x1, x2)-plane. beta = omega = k/2
/// gives Re(c z^{k/2}).
struct AngularMode {
  double beta = 0.5;
  double omega = 0.5;
  CVec c;
};

/// Re(c sqrt(P(z))), P(z) = lead * prod (z - root).
struct BranchPolynomialPart {
  CVec c;
  Complex lead{1.0, 0.0};
  std::vector<Complex> roots;
};

/// Re(c z^{1/2} (z - slope * max(0, y1 - y_cap))): degree 3/2 behavior on the
/// axis for y1 <= y_cap and degree 1/2 beyond.
struct CappedBranchPart {
  CVec c;
  double slope = 1.0;
  double y_cap = 0.0;
};

enum class FieldKind { cylindrical_power, power_sum, branch_polynomial, custom };

std::string to_string(FieldKind kind);

class AnalyticTwoValuedField : public TwoValuedField {
 public:
  using Symmetric = std::variant<std::monostate, std::vector<AngularMode>, BranchPolynomialPart, CappedBranchPart>;

  AnalyticTwoValuedField(int n, int m, FieldKind kind, Symmetric symmetric, VectorPolynomial average);

  int dim() const override { return n_; }
  int codim() const override { return m_; }
  UnorderedPair eval(const Vec& x) const override;
  Jet jet(const Vec& x) const override;

  FieldKind kind() const { return kind_; }
  const Symmetric& symmetric_part() const { return symmetric_; }
  const VectorPolynomial& average() const { return average_; }

  /// Symmetric value s(X) for a fixed internal branch (sign is arbitrary).
  Vec symmetric_value(const Vec& x) const;

  AnalyticTwoValuedField with_average(const VectorPolynomial& h) const;
  AnalyticTwoValuedField scaled(double factor) const;

 private:
  void symmetric_jet(const Vec& x, Vec& s, Mat& ds, bool want_grad) const;

  int n_;
  int m_;
  FieldKind kind_;
  Symmetric symmetric_;
  VectorPolynomial average_;
};

struct PowerTerm {
  CVec c;
  int k = 1;
};

/// {±Re(c z^{k/2})}
AnalyticTwoValuedField cylindrical(int n, const CVec& c, int k);
/// {±Re(sum c_j z^{k_j/2})}; all k_j must share parity.
AnalyticTwoValuedField power_sum(int n, const std::vector<PowerTerm>& terms);
/// {±Re(c sqrt(lead prod (z - root)))}
AnalyticTwoValuedField branch_polynomial(int n, const CVec& c, const std::vector<Complex>& roots,
                                         Complex lead = {1.0, 0.0});
/// Sum of angular modes; frequencies must share parity class (all 2*omega of equal parity).
AnalyticTwoValuedField angular_modes(int n, const std::vector<AngularMode>& modes);
AnalyticTwoValuedField capped_branch(int n, const CVec& c, double slope, double y_cap);
/// {h, h}: zero symmetric part.
AnalyticTwoValuedField single_valued(int n, const VectorPolynomial& h);

CVec make_cvec(std::initializer_list<Complex> values);

}  // namespace branchlab
