#pragma once

// Unordered pairs {a1, a2} of m-vectors, the metric G and the
// average/symmetric split.

#include "branchlab/types.hpp"

namespace branchlab {

/// Stored ordered; every public comparison quotients by swap.
struct UnorderedPair {
  Vec a1;
  Vec a2;

  UnorderedPair() = default;
  UnorderedPair(Vec first, Vec second) : a1(std::move(first)), a2(std::move(second)) {}

  static UnorderedPair zero(int m) { return {Vec::Zero(m), Vec::Zero(m)}; }
  static UnorderedPair symmetric(const Vec& s) { return {s, -s}; }

  int dim() const { return static_cast<int>(a1.size()); }
  double norm_sq() const { return a1.squaredNorm() + a2.squaredNorm(); }
  double norm() const;
  UnorderedPair swapped() const { return {a2, a1}; }
  bool is_symmetric(double tol = 0.0) const;
};

enum class Pairing { identity, swap };

double metric_g(const UnorderedPair& a, const UnorderedPair& b);
double metric_g_sq(const UnorderedPair& a, const UnorderedPair& b);

/// Ties go to identity.
Pairing optimal_pairing(const UnorderedPair& a, const UnorderedPair& b);

/// Reorders b so that its stored order matches the optimal pairing with a.
UnorderedPair aligned(const UnorderedPair& reference, const UnorderedPair& b);

bool equal_unordered(const UnorderedPair& a, const UnorderedPair& b, double tol = 0.0);

struct Decomposition {
  Vec average;
  UnorderedPair symmetric;
};

Decomposition decompose(const UnorderedPair& a);
UnorderedPair recompose(const Vec& average, const UnorderedPair& symmetric);

}  // namespace branchlab
