// Microbenchmarks for the hot paths: rate conversion, MFCC extraction,
// posterior evaluation, Gram assembly and the SMO solver.

#include <benchmark/benchmark.h>

#include <cmath>
#include <random>
#include <vector>

#include "aed/gmm.hpp"
#include "aed/kernels.hpp"
#include "aed/mfcc.hpp"
#include "aed/resample.hpp"
#include "aed/svm.hpp"
#include "aed/synth.hpp"

namespace {

aed::Waveform test_clip(double seconds) {
  return aed::synth_clip(aed::default_synth_classes()[0], seconds, 42);
}

aed::Matrix gaussian_frames(std::size_t t, std::size_t d, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  aed::Matrix m(t, d);
  for (double& v : m.data()) v = n(rng);
  return m;
}

void bm_resample(benchmark::State& state) {
  const auto in_rate = static_cast<int>(state.range(0));
  std::vector<double> in(static_cast<std::size_t>(in_rate));  // one second
  for (std::size_t i = 0; i < in.size(); ++i)
    in[i] = std::sin(0.057 * static_cast<double>(i));
  for (auto _ : state)
    benchmark::DoNotOptimize(aed::resample(in, in_rate, 44100));
  state.SetItemsProcessed(state.iterations() *
                          static_cast<std::int64_t>(in.size()));
}
BENCHMARK(bm_resample)->Arg(22050)->Arg(48000)->Arg(8000);

void bm_extract_mfcc(benchmark::State& state) {
  const auto w = test_clip(static_cast<double>(state.range(0)));
  const aed::MfccConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(aed::extract_mfcc(w, cfg));
  state.SetItemsProcessed(state.iterations() *
                          static_cast<std::int64_t>(w.samples.size()));
}
BENCHMARK(bm_extract_mfcc)->Arg(1)->Arg(4);

void bm_posterior_matrix(benchmark::State& state) {
  const auto m = static_cast<int>(state.range(0));
  const aed::Matrix frames = gaussian_frames(265, 20, 1);
  aed::GmmTrainConfig cfg;
  cfg.components = m;
  cfg.max_iterations = 5;
  const aed::DiagGmm g = aed::train_gmm(frames, cfg);
  for (auto _ : state)
    benchmark::DoNotOptimize(aed::posterior_matrix(g, frames));
  state.SetItemsProcessed(state.iterations() * 265 * m);
}
BENCHMARK(bm_posterior_matrix)->Arg(32)->Arg(256);

void bm_gram(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  aed::FeatureRows rows(n, std::vector<double>(32));
  for (auto& r : rows) {
    double sum = 0.0;
    for (double& v : r) {
      v = u(rng);
      sum += v;
    }
    for (double& v : r) v /= sum;
  }
  const aed::KernelSpec spec{aed::KernelKind::exp_chi2, 1.0};
  for (auto _ : state) benchmark::DoNotOptimize(aed::gram(spec, rows));
  state.SetItemsProcessed(state.iterations() *
                          static_cast<std::int64_t>(n * n));
}
BENCHMARK(bm_gram)->Arg(54)->Arg(216);

void bm_smo(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937 rng(3);
  std::normal_distribution<double> noise(0.0, 1.0);
  aed::FeatureRows rows(n, std::vector<double>(16));
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = i % 2 == 0 ? 1 : -1;
    for (double& v : rows[i]) v = noise(rng) + (y[i] > 0 ? 0.75 : -0.75);
  }
  const aed::GramMatrix k =
      aed::gram(aed::KernelSpec{aed::KernelKind::rbf, 0.1}, rows);
  for (auto _ : state)
    benchmark::DoNotOptimize(aed::train_csvc(k, y, 1.0));
  state.SetItemsProcessed(state.iterations() *
                          static_cast<std::int64_t>(n));
}
BENCHMARK(bm_smo)->Arg(54)->Arg(216);

}  // namespace

BENCHMARK_MAIN();
