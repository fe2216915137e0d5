#include "lrtar/regularized.hpp"
#include "lrtar/rng.hpp"

#include <benchmark/benchmark.h>

using namespace lrtar;

namespace {

DenseTensor random_tensor(const Dims& dims, std::uint64_t seed) {
  NormalSampler normal(seed);
  DenseTensor t(dims);
  for (Index i = 0; i < t.size(); ++i) t[i] = normal();
  return t;
}

void bm_matricize(benchmark::State& state) {
  const Index p = state.range(0);
  DenseTensor t = random_tensor({p, p, p, p}, 1);
  for (auto _ : state) benchmark::DoNotOptimize(matricize(t, {0, 3}));
}
BENCHMARK(bm_matricize)->Arg(5)->Arg(8)->Arg(12);

void bm_mode_product(benchmark::State& state) {
  const Index p = state.range(0);
  DenseTensor t = random_tensor({p, p, p}, 2);
  NormalSampler normal(3);
  Matrix m(p, p);
  for (Index c = 0; c < p; ++c)
    for (Index r = 0; r < p; ++r) m(r, c) = normal();
  for (auto _ : state) benchmark::DoNotOptimize(mode_product(t, m, 1));
}
BENCHMARK(bm_mode_product)->Arg(8)->Arg(16)->Arg(32);

void bm_hosvd(benchmark::State& state) {
  const Index p = state.range(0);
  DenseTensor t = random_tensor({p, p, p, p}, 4);
  Dims ranks(4, 2);
  for (auto _ : state) benchmark::DoNotOptimize(hosvd(t, ranks));
}
BENCHMARK(bm_hosvd)->Arg(5)->Arg(8);

void bm_fit_ssn(benchmark::State& state) {
  const Index p = state.range(0);
  LrtarModel model = make_dgp({p, p}, {2, 2, 2, 2}, 5);
  TensorSeries series = model.simulate(400, 200, 6);
  RegressionDesign design = RegressionDesign::from_series(series);
  RegOptions opts;
  opts.lambda = 0.2 * ssn_lambda_max(design);
  for (auto _ : state) benchmark::DoNotOptimize(fit_ssn(design, opts));
}
BENCHMARK(bm_fit_ssn)->Arg(5)->Arg(8)->Unit(benchmark::kMillisecond);

void bm_fit_ltr(benchmark::State& state) {
  const Index p = state.range(0);
  LrtarModel model = make_dgp({p, p}, {2, 2, 2, 2}, 7);
  TensorSeries series = model.simulate(400, 200, 8);
  RegressionDesign design = RegressionDesign::from_series(series);
  for (auto _ : state)
    benchmark::DoNotOptimize(fit_ltr(design, {2, 2, 2, 2}));
}
BENCHMARK(bm_fit_ltr)->Arg(5)->Arg(8)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
