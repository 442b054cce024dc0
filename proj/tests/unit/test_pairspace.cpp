#include <doctest.h>

#include "branchlab/pairspace.hpp"

#include "helpers.hpp"

#include <random>

using namespace branchlab;
using testing_support::vec;

namespace {

std::vector<double> std_vec(const Vec& v) { return {v.data(), v.data() + v.size()}; }

UnorderedPair random_pair(std::mt19937_64& rng, int m) {
  std::normal_distribution<double> d;
  Vec a(m), b(m);
  for (int i = 0; i < m; ++i) {
    a[i] = d(rng);
    b[i] = d(rng);
  }
  return {a, b};
}

}  // namespace

TEST_CASE("metric of equal pairs and against zero") {
  const UnorderedPair a{vec({1.0, 0.0}), vec({0.0, 1.0})};
  CHECK(metric_g(a, a) == 0.0);
  CHECK(metric_g(a, a.swapped()) == 0.0);
  CHECK(metric_g(a, UnorderedPair::zero(2)) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
}

TEST_CASE("metric picks the better of the two pairings") {
  // identity: |(1,0)-(0,1)|^2 + |(0,1)-(2,0)|^2 = 7, swap: 1 + 0 = 1
  const UnorderedPair a{vec({1.0, 0.0}), vec({0.0, 1.0})};
  const UnorderedPair b{vec({0.0, 1.0}), vec({2.0, 0.0})};
  CHECK(metric_g_sq(a, b) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(optimal_pairing(a, b) == Pairing::swap);
  const UnorderedPair al = aligned(a, b);
  CHECK((al.a1 - vec({2.0, 0.0})).norm() == 0.0);
}

TEST_CASE("ties resolve to identity") {
  const UnorderedPair a{vec({1.0}), vec({-1.0})};
  const UnorderedPair b{vec({0.0}), vec({0.0})};
  CHECK(optimal_pairing(a, b) == Pairing::identity);
}

TEST_CASE("decompose splits average and symmetric part") {
  const UnorderedPair a{vec({3.0, 1.0}), vec({1.0, -1.0})};
  const Decomposition d = decompose(a);
  CHECK((d.average - vec({2.0, 0.0})).norm() == 0.0);
  CHECK(d.symmetric.is_symmetric());
  CHECK(equal_unordered(d.symmetric, UnorderedPair::symmetric(vec({1.0, 1.0}))));

  const UnorderedPair s = UnorderedPair::symmetric(vec({0.5, -2.0}));
  CHECK(decompose(s).average.norm() == 0.0);
}

TEST_CASE("recompose inverts decompose exactly on dyadic values") {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> d(-64, 64);
  for (int trial = 0; trial < 200; ++trial) {
    Vec x(3), y(3);
    for (int i = 0; i < 3; ++i) {
      x[i] = d(rng) / 8.0;
      y[i] = d(rng) / 8.0;
    }
    const UnorderedPair a{x, y};
    const Decomposition dec = decompose(a);
    const UnorderedPair back = recompose(dec.average, dec.symmetric);
    CHECK(equal_unordered(back, a));
  }
}

TEST_CASE("property: metric agrees with brute force over both pairings") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 500; ++trial) {
    const int m = 1 + trial % 4;
    const UnorderedPair a = random_pair(rng, m), b = random_pair(rng, m);
    const double ref = oracle::pair_distance_sq(std_vec(a.a1), std_vec(a.a2), std_vec(b.a1), std_vec(b.a2));
    CHECK(metric_g_sq(a, b) == doctest::Approx(ref).epsilon(1e-13));
    const bool id = oracle::identity_is_optimal(std_vec(a.a1), std_vec(a.a2), std_vec(b.a1), std_vec(b.a2));
    CHECK((optimal_pairing(a, b) == Pairing::identity) == id);
  }
}

TEST_CASE("property: metric axioms") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 500; ++trial) {
    const int m = 1 + trial % 3;
    const UnorderedPair a = random_pair(rng, m), b = random_pair(rng, m), c = random_pair(rng, m);
    CHECK(metric_g(a, b) == doctest::Approx(metric_g(b, a)).epsilon(1e-14));
    CHECK(metric_g(a, b) >= 0.0);
    CHECK(metric_g(a, c) <= metric_g(a, b) + metric_g(b, c) + 1e-12);
    CHECK(metric_g(a, b.swapped()) == doctest::Approx(metric_g(a, b)).epsilon(1e-14));
    CHECK(metric_g(a, UnorderedPair::zero(m)) == doctest::Approx(a.norm()).epsilon(1e-14));
    CHECK(metric_g(a, a.swapped()) == 0.0);
  }
}

TEST_CASE("property: symmetric parts are symmetric and the split is orthogonal") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 300; ++trial) {
    const UnorderedPair a = random_pair(rng, 2);
    const Decomposition d = decompose(a);
    CHECK(d.symmetric.is_symmetric(1e-14));
    // |a|^2 = 2 |average|^2 + |symmetric|^2
    CHECK(a.norm_sq() == doctest::Approx(2.0 * d.average.squaredNorm() + d.symmetric.norm_sq()).epsilon(1e-13));
    CHECK(equal_unordered(recompose(d.average, d.symmetric), a, 1e-14));
  }
}
