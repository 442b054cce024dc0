#include "branchlab/pairspace.hpp"

#include <cmath>

namespace branchlab {

namespace {

void require_same_dim(const UnorderedPair& a, const UnorderedPair& b) {
  if (a.a1.size() != b.a1.size() || a.a2.size() != b.a2.size() || a.a1.size() != a.a2.size())
    throw InvalidInput("unordered pairs of different dimension");
}

double cost_identity(const UnorderedPair& a, const UnorderedPair& b) {
  return (a.a1 - b.a1).squaredNorm() + (a.a2 - b.a2).squaredNorm();
}

double cost_swap(const UnorderedPair& a, const UnorderedPair& b) {
  return (a.a1 - b.a2).squaredNorm() + (a.a2 - b.a1).squaredNorm();
}

}  // namespace

double UnorderedPair::norm() const { return std::sqrt(norm_sq()); }

bool UnorderedPair::is_symmetric(double tol) const {
  return (a1 + a2).lpNorm<Eigen::Infinity>() <= tol;
}

double metric_g_sq(const UnorderedPair& a, const UnorderedPair& b) {
  require_same_dim(a, b);
  return std::min(cost_identity(a, b), cost_swap(a, b));
}

double metric_g(const UnorderedPair& a, const UnorderedPair& b) { return std::sqrt(metric_g_sq(a, b)); }

Pairing optimal_pairing(const UnorderedPair& a, const UnorderedPair& b) {
  require_same_dim(a, b);
  return cost_swap(a, b) < cost_identity(a, b) ? Pairing::swap : Pairing::identity;
}

UnorderedPair aligned(const UnorderedPair& reference, const UnorderedPair& b) {
  return optimal_pairing(reference, b) == Pairing::swap ? b.swapped() : b;
}

bool equal_unordered(const UnorderedPair& a, const UnorderedPair& b, double tol) {
  return metric_g(a, b) <= tol;
}

Decomposition decompose(const UnorderedPair& a) {
  Vec avg = 0.5 * (a.a1 + a.a2);
  Vec s = 0.5 * (a.a1 - a.a2);
  return {avg, UnorderedPair::symmetric(s)};
}

UnorderedPair recompose(const Vec& average, const UnorderedPair& symmetric) {
  return {average + symmetric.a1, average + symmetric.a2};
}

}  // namespace branchlab
