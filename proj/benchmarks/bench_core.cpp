#include "fmre/distributions.hpp"
#include "fmre/estimators.hpp"
#include "fmre/frechet.hpp"
#include "fmre/rng.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace fmre;

void BM_HaarOrthogonal(benchmark::State& state) {
  std::mt19937_64 rng = make_rng(1);
  int p = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(haar_orthogonal(p, rng));
  }
}
BENCHMARK(BM_HaarOrthogonal)->Arg(2)->Arg(4)->Arg(8);

void BM_VmfSample(benchmark::State& state) {
  std::mt19937_64 rng = make_rng(2);
  VmfParams params(UnitVector(Vec::Unit(state.range(0) + 1, 0)), 2.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(vmf_sample(params, rng));
  }
}
BENCHMARK(BM_VmfSample)->Arg(1)->Arg(2)->Arg(9);

void BM_WishartSample(benchmark::State& state) {
  std::mt19937_64 rng = make_rng(3);
  int p = static_cast<int>(state.range(0));
  Vec eigs = Vec::LinSpaced(p, 1.0, p);
  WishartParams params(40, SpdMatrix(eigs.asDiagonal()));
  for (auto _ : state) {
    benchmark::DoNotOptimize(wishart_sample(params, rng));
  }
}
BENCHMARK(BM_WishartSample)->Arg(2)->Arg(4);

void BM_MatrixLog(benchmark::State& state) {
  std::mt19937_64 rng = make_rng(4);
  int p = static_cast<int>(state.range(0));
  Vec eigs = Vec::LinSpaced(p, 1.0, p);
  SpdMatrix x = wishart_sample(WishartParams(40, SpdMatrix(eigs.asDiagonal())), rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(matrix_log(x));
  }
}
BENCHMARK(BM_MatrixLog)->Arg(2)->Arg(4)->Arg(8);

void BM_SphereFrechetMean(benchmark::State& state) {
  std::mt19937_64 rng = make_rng(5);
  VmfParams params(UnitVector(Vec::Unit(3, 0)), 4.0);
  std::vector<ManifoldPoint> points;
  for (int i = 0; i < state.range(0); ++i) points.emplace_back(vmf_sample(params, rng));
  for (auto _ : state) {
    benchmark::DoNotOptimize(sample_frechet_mean(points));
  }
}
BENCHMARK(BM_SphereFrechetMean)->Arg(100)->Arg(1000);

void BM_TorusGibbsSweep(benchmark::State& state) {
  std::mt19937_64 rng = make_rng(6);
  int p = 3;
  TorusModelParams params(TorusPoint::from_angles(Vec::Zero(p)), Vec::Constant(p, 2.0),
                          Vec::Constant(p * (p - 1) / 2, 1.0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(torus_gibbs_sample(params, 1, rng));
  }
}
BENCHMARK(BM_TorusGibbsSweep);

void BM_TorusLogNormalizer(benchmark::State& state) {
  int p = static_cast<int>(state.range(0));
  Vec kappa = Vec::Constant(p, 2.0);
  Vec lambda = Vec::Constant(p * (p - 1) / 2, 1.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(torus_log_normalizer(kappa, lambda, p, 64));
  }
}
BENCHMARK(BM_TorusLogNormalizer)->Arg(2)->Arg(3);

void BM_MreMonteCarloVmfCircle(benchmark::State& state) {
  std::mt19937_64 rng = make_rng(7);
  VmfParams params(UnitVector(Vec::Unit(2, 0)), 2.0);
  std::vector<ManifoldPoint> data;
  for (int i = 0; i < 5; ++i) data.emplace_back(vmf_sample(params, rng));
  McmcConfig cfg;
  cfg.iterations = 1500;
  cfg.burn_in = 500;
  for (auto _ : state) {
    std::mt19937_64 chain_rng = make_rng(8);
    benchmark::DoNotOptimize(mre_monte_carlo(data, VmfOrbit{2.0}, cfg, chain_rng));
  }
}
BENCHMARK(BM_MreMonteCarloVmfCircle);

}  // namespace

BENCHMARK_MAIN();
