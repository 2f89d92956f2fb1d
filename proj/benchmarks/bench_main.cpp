#include <benchmark/benchmark.h>

#include <random>

#include "hdm/config.hpp"
#include "hdm/hierarchical.hpp"
#include "hdm/mask_math.hpp"
#include "hdm/render.hpp"
#include "hdm/testbed.hpp"

using namespace hdm;

namespace {

MaskGrid random_grid(int h, int w, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  MaskGrid g(h, w);
  for (double& v : g.v) v = dist(rng);
  return g;
}

const PlantedDataset& dataset() {
  static const PlantedDataset data = generate_dataset(7, TestbedConfig{});
  return data;
}

const LinearClassifier& model() {
  static const LinearClassifier m = fit_linear(dataset());
  return m;
}

void BM_upsample(benchmark::State& state) {
  const int src = static_cast<int>(state.range(0));
  const MaskGrid g = random_grid(src, src, 1);
  for (auto _ : state) benchmark::DoNotOptimize(upsample(g, 224, 224));
}
BENCHMARK(BM_upsample)->Arg(6)->Arg(11)->Arg(48)->Arg(96);

void BM_upsample_adjoint(benchmark::State& state) {
  const int src = static_cast<int>(state.range(0));
  const MaskGrid g = random_grid(224, 224, 2);
  for (auto _ : state) benchmark::DoNotOptimize(upsample_adjoint(g, src, src));
}
BENCHMARK(BM_upsample_adjoint)->Arg(6)->Arg(11)->Arg(48);

void BM_loss_and_gradient_direct(benchmark::State& state) {
  const LinearClassifier& m = model();
  const Image& x = dataset().images[0];
  const MaskGrid trainable = random_grid(4, 4, 3);
  const Chain chain = DirectChain{};
  MaskGrid grad(4, 4);
  for (auto _ : state)
    benchmark::DoNotOptimize(loss_and_gradient(m, x, trainable, chain, 7.0, 0, grad));
}
BENCHMARK(BM_loss_and_gradient_direct);

void BM_train_benchmark_grid(benchmark::State& state) {
  const LinearClassifier& m = model();
  DMConfig cfg = preset("desk").hdm.dm;
  cfg.epochs = static_cast<int>(state.range(0));
  const Image& x = dataset().images[0];
  for (auto _ : state)
    benchmark::DoNotOptimize(train_benchmark(m, x, {4, 4}, cfg, 0));
}
BENCHMARK(BM_train_benchmark_grid)->Arg(50)->Arg(200);

void BM_run_dm_desk(benchmark::State& state) {
  const LinearClassifier& m = model();
  const DMConfig cfg = preset("desk").hdm.dm;
  const Image& x = dataset().images[0];
  for (auto _ : state) benchmark::DoNotOptimize(run_dm(m, x, cfg, 0));
}
BENCHMARK(BM_run_dm_desk)->Unit(benchmark::kMillisecond);

void BM_explain_desk(benchmark::State& state) {
  const LinearClassifier& m = model();
  const ToolkitConfig cfg = preset("desk");
  RawImage raw;
  raw.pixels = dataset().images[0];
  for (auto _ : state)
    benchmark::DoNotOptimize(explain(m, raw, cfg.hdm, cfg.mean, cfg.stddev));
}
BENCHMARK(BM_explain_desk)->Unit(benchmark::kMillisecond);

void BM_heatmap_render(benchmark::State& state) {
  const MaskGrid map = random_grid(224, 224, 4);
  for (auto _ : state) benchmark::DoNotOptimize(heatmap_image(map));
}
BENCHMARK(BM_heatmap_render);

}  // namespace

BENCHMARK_MAIN();
