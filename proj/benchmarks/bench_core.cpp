#include "branchlab/analytic_field.hpp"
#include "branchlab/frequency.hpp"
#include "branchlab/minimizer.hpp"
#include "branchlab/pairspace.hpp"
#include "branchlab/profiles.hpp"
#include "branchlab/spectral.hpp"

#include <benchmark/benchmark.h>

using namespace branchlab;

namespace {

CVec isotropic() { return make_cvec({Complex(1.0, 0.0), Complex(0.0, 1.0)}) / std::sqrt(2.0); }

void BM_PairDistance(benchmark::State& state) {
  Vec a1(2), a2(2), b1(2), b2(2);
  a1 << 1.0, 0.0;
  a2 << 0.0, 1.0;
  b1 << 0.0, 1.0;
  b2 << 2.0, 0.0;
  const UnorderedPair p(a1, a2), q(b1, b2);
  for (auto _ : state) benchmark::DoNotOptimize(metric_g(p, q));
}
BENCHMARK(BM_PairDistance);

void BM_FieldJet(benchmark::State& state) {
  const auto u = cylindrical(3, isotropic(), 3);
  Vec x(3);
  x << 0.3, -0.2, 0.1;
  for (auto _ : state) benchmark::DoNotOptimize(u.jet(x));
}
BENCHMARK(BM_FieldJet);

void BM_Frequency(benchmark::State& state) {
  const auto u = cylindrical(2, isotropic(), 1);
  const QuadLevel level = QuadLevel::at(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(frequency_profile(u, Vec::Zero(2), {0.5}, level));
}
BENCHMARK(BM_Frequency)->DenseRange(2, 5)->Unit(benchmark::kMillisecond);

void BM_BranchedLaplace(benchmark::State& state) {
  const auto u = cylindrical(2, isotropic(), 1);
  const int N = static_cast<int>(state.range(0));
  CoverGrid g;
  g.n_radial = N;
  g.n_theta = N;
  const BoundaryTable data = boundary_from_field(u, 1.0, 4 * N);
  for (auto _ : state) benchmark::DoNotOptimize(solve_branched_laplace(data, g, {{Vec::Zero(2)}}));
}
BENCHMARK(BM_BranchedLaplace)->RangeMultiplier(2)->Range(32, 128)->Unit(benchmark::kMillisecond);

void BM_FitProfile(benchmark::State& state) {
  const auto u = power_sum(2, {{isotropic(), 1}, {make_cvec({0.01, Complex(0.0, 0.02)}), 3}});
  const CylindricalProfile guess(2, make_cvec({1.0, Complex(0.0, 0.8)}), 1);
  for (auto _ : state) benchmark::DoNotOptimize(fit_profile(u, guess, FitOptions{}));
}
BENCHMARK(BM_FitProfile)->Unit(benchmark::kMillisecond);

void BM_ProjectL(benchmark::State& state) {
  const CylindricalProfile phi(2, isotropic(), 1);
  const CoverFunction w = [](double r, double th, const Vec&) -> Vec {
    Vec v = Vec::Zero(2);
    v[0] = std::pow(r, 1.5) * std::cos(1.5 * th);
    return v;
  };
  for (auto _ : state) benchmark::DoNotOptimize(project_L(w, phi, 1.0));
}
BENCHMARK(BM_ProjectL)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
