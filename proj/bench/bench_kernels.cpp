// Serial reference kernels against their OpenMP counterparts.
#include <benchmark/benchmark.h>

#include <cstdint>
#include <numeric>
#include <vector>

#include "cbm/kernels.hpp"

using namespace cbm;

namespace {

constexpr int kDim = 2;
constexpr double kDt = 0.01;

struct Fixture {
  Ensemble e;
  std::vector<double> log_w, noise, center;
  std::vector<std::uint32_t> labels;
  RngStream rng{42};

  explicit Fixture(int n) : e(sample_initial({}, n, kDim, 2.0, RngStream(7), 0, Species::X)) {
    log_w.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) log_w[i] = -5.0 * (e.row(i)[0] * e.row(i)[0] + e.row(i)[1] * e.row(i)[1]);
    labels.resize(static_cast<std::size_t>(n));
    std::iota(labels.begin(), labels.end(), 0u);
    noise.resize(e.positions.size());
    center.assign(kDim, 0.0);
  }
};

template <bool Omp>
void bm_mean(benchmark::State& st) {
  Fixture f(static_cast<int>(st.range(0)));
  std::vector<double> out(kDim);
  for (auto _ : st) {
    if constexpr (Omp) kernels::omp::mean(f.e, out);
    else kernels::serial::mean(f.e, out);
    benchmark::DoNotOptimize(out.data());
  }
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

template <bool Omp>
void bm_central_moment(benchmark::State& st) {
  Fixture f(static_cast<int>(st.range(0)));
  for (auto _ : st) {
    double v = Omp ? kernels::omp::central_moment(f.e, f.center, 2.0) : kernels::serial::central_moment(f.e, f.center, 2.0);
    benchmark::DoNotOptimize(v);
  }
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

template <bool Omp>
void bm_weighted_average(benchmark::State& st) {
  Fixture f(static_cast<int>(st.range(0)));
  std::vector<double> out(kDim);
  for (auto _ : st) {
    double z = Omp ? kernels::omp::weighted_average(f.e, f.log_w, 0.0, out)
                   : kernels::serial::weighted_average(f.e, f.log_w, 0.0, out);
    benchmark::DoNotOptimize(z);
  }
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

template <bool Omp>
void bm_fill_noise(benchmark::State& st) {
  Fixture f(static_cast<int>(st.range(0)));
  std::uint32_t step = 0;
  for (auto _ : st) {
    if constexpr (Omp) kernels::omp::fill_noise(f.rng, 0, Species::X, f.labels, step++, kDim, kDt, f.noise);
    else kernels::serial::fill_noise(f.rng, 0, Species::X, f.labels, step++, kDim, kDt, f.noise);
    benchmark::DoNotOptimize(f.noise.data());
  }
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

template <bool Omp>
void bm_step(benchmark::State& st) {
  Fixture f(static_cast<int>(st.range(0)));
  const CutoffSpec cut = CutoffSpec::make(2.0);
  kernels::serial::fill_noise(f.rng, 0, Species::X, f.labels, 0, kDim, kDt, f.noise);
  for (auto _ : st) {
    auto s = Omp ? kernels::omp::drift_diffusion_step(f.e, f.center, 3.0, 0.2, cut, f.noise, kDt, true)
                 : kernels::serial::drift_diffusion_step(f.e, f.center, 3.0, 0.2, cut, f.noise, kDt, true);
    benchmark::DoNotOptimize(s);
  }
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

#define CBM_BENCH_PAIR(fn)                                                          \
  BENCHMARK(fn<false>)->Name(#fn "/serial")->RangeMultiplier(8)->Range(256, 1 << 17); \
  BENCHMARK(fn<true>)->Name(#fn "/omp")->RangeMultiplier(8)->Range(256, 1 << 17)

CBM_BENCH_PAIR(bm_mean);
CBM_BENCH_PAIR(bm_central_moment);
CBM_BENCH_PAIR(bm_weighted_average);
CBM_BENCH_PAIR(bm_fill_noise);
CBM_BENCH_PAIR(bm_step);

}  // namespace

BENCHMARK_MAIN();
