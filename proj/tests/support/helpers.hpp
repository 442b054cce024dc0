#pragma once

#include "branchlab/analytic_field.hpp"
#include "branchlab/types.hpp"

#include "oracles.hpp"

#include <random>

namespace testing_support {

inline branchlab::Vec vec(std::initializer_list<double> v) {
  branchlab::Vec x(static_cast<int>(v.size()));
  int i = 0;
  for (double d : v) x[i++] = d;
  return x;
}

inline branchlab::CVec to_cvec(const std::vector<oracle::cplx>& c) {
  branchlab::CVec v(static_cast<int>(c.size()));
  for (std::size_t i = 0; i < c.size(); ++i) v[static_cast<int>(i)] = c[i];
  return v;
}

inline std::vector<oracle::cplx> random_c(std::mt19937_64& rng, int m) {
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  std::vector<oracle::cplx> c(m);
  for (auto& x : c) x = {d(rng), d(rng)};
  return c;
}

inline std::vector<oracle::cplx> isotropic_c() {
  const double s = 1.0 / std::sqrt(2.0);
  return {{s, 0.0}, {0.0, s}};
}

/// Library field matching a list of oracle terms (all degrees share parity class).
inline branchlab::AnalyticTwoValuedField power_field(int n, const std::vector<oracle::Term>& terms) {
  std::vector<branchlab::PowerTerm> pts;
  for (const auto& t : terms) pts.push_back({to_cvec(t.c), static_cast<int>(std::lround(2.0 * t.a))});
  return branchlab::power_sum(n, pts);
}

}  // namespace testing_support
