#include <benchmark/benchmark.h>

#include <Eigen/Dense>

#include "prevalid/data_model.hpp"
#include "prevalid/external_models.hpp"
#include "prevalid/internal_models.hpp"
#include "prevalid/permutation.hpp"
#include "prevalid/prevalidation.hpp"
#include "prevalid/rng.hpp"

using namespace prevalid;

namespace {

Dataset make_data(int n, int p, int e, std::uint64_t seed) {
  Rng rng(seed);
  Dataset d;
  d.X.resize(n, p);
  d.y.resize(n);
  d.Z.resize(n, e);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) d.X(i, j) = rng.normal();
    d.y[i] = rng.normal();
    for (int k = 0; k < e; ++k) d.Z(i, k) = rng.normal();
  }
  return d;
}

void BM_loo_closed_form(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Dataset d = make_data(n, 5, 0, 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(loo_linear_prevalidate(d.X, d.y));
  }
}
BENCHMARK(BM_loo_closed_form)->Arg(100)->Arg(500)->Arg(2000);

void BM_prevalidate_kfold(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const int K = static_cast<int>(state.range(1));
  const Dataset d = make_data(n, 5, 0, 2);
  const auto folds = make_folds(n, K, std::nullopt, 3);
  InternalModelSpec spec;  // ols
  for (auto _ : state) {
    benchmark::DoNotOptimize(prevalidate(d, spec, folds, 0));
  }
}
BENCHMARK(BM_prevalidate_kfold)->Args({50, 5})->Args({50, 10})->Args({200, 10});

void BM_prevalidate_lasso(benchmark::State& state) {
  const Dataset d = make_data(static_cast<int>(state.range(0)), 100, 0, 4);
  const auto folds = make_folds(static_cast<int>(state.range(0)), 5, std::nullopt, 5);
  InternalModelSpec spec;
  spec.kind = ModelKind::lasso_l;
  spec.l = 5;
  for (auto _ : state) {
    benchmark::DoNotOptimize(prevalidate(d, spec, folds, 0));
  }
}
BENCHMARK(BM_prevalidate_lasso)->Arg(10)->Arg(50);

void BM_external_linear(benchmark::State& state) {
  const Dataset d = make_data(static_cast<int>(state.range(0)), 5, 2, 6);
  const Eigen::VectorXd yt = loo_linear_prevalidate(d.X, d.y);
  for (auto _ : state) {
    benchmark::DoNotOptimize(fit_linear_external(yt, d.Z, d.y, true));
  }
}
BENCHMARK(BM_external_linear)->Arg(50)->Arg(500);

void BM_permutation_pipeline(benchmark::State& state) {
  const Dataset d = make_data(20, 5, 1, 7);
  InternalModelSpec spec;
  const int B = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        permutation_test_all(d, spec, ExternalKind::linear, 5, B, 11));
  }
}
BENCHMARK(BM_permutation_pipeline)->Arg(50)->Arg(200);

}  // namespace

BENCHMARK_MAIN();
