#include <benchmark/benchmark.h>

#include "dualmixer/fsgri.hpp"
#include "dualmixer/rng.hpp"
#include "dualmixer/runtime.hpp"

using namespace dualmixer;
using numerics::Graph;
using numerics::Tensor;

namespace {

Tensor random(Rng& rng, std::size_t r, std::size_t c) {
  Tensor t(r, c);
  for (auto& v : t.values()) v = rng.uniform(-1, 1);
  return t;
}

Tensor stacked(std::size_t n, const model::ModelConfig& mc) {
  Rng rng(1);
  return random(rng, n * mc.window, mc.n_vars);
}

std::vector<data::WindowSample> windows(std::size_t n, const model::ModelConfig& mc) {
  Rng rng(1);
  std::vector<data::WindowSample> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i].values = random(rng, mc.window, mc.n_vars);
    out[i].label = rng.uniform();
  }
  return out;
}

model::ModelConfig reference() {
  model::ModelConfig mc;  // w=30, d=32, N=6
  mc.n_vars = 14;
  return mc;
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(2);
  auto a = random(rng, n, n), b = random(rng, n, n);
  for (auto _ : state) benchmark::DoNotOptimize(numerics::matmul(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(32)->Arg(128)->Arg(512);

void BM_Forward(benchmark::State& state) {
  tune_allocator();
  auto mc = reference();
  model::DualMixer m(mc);
  const auto b = static_cast<std::size_t>(state.range(0));
  auto x = stacked(b, mc);
  for (auto _ : state) {
    Graph g(m.parameters());
    benchmark::DoNotOptimize(m.forward(g, g.constant(x), b).rul.value()[0]);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Forward)->Arg(1)->Arg(128);

void BM_ForwardBackward(benchmark::State& state) {
  tune_allocator();
  auto mc = reference();
  model::DualMixer m(mc);
  const auto b = static_cast<std::size_t>(state.range(0));
  auto x = stacked(b, mc);
  for (auto _ : state) {
    m.parameters().zero_grad();
    Graph g(&m.parameters());
    auto out = m.forward(g, g.constant(x), b);
    g.backward(numerics::mean(out.rul));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ForwardBackward)->Arg(128);

void BM_GaussianThresholdSample(benchmark::State& state) {
  fsgri::FsgriConfig c;
  const auto t = static_cast<std::size_t>(state.range(0));
  Rng rng(3);
  std::size_t anchor = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(fsgri::gaussian_threshold_sample(rng, t, anchor, c));
    anchor = (anchor + 37) % t;
  }
}
BENCHMARK(BM_GaussianThresholdSample)->Arg(128)->Arg(362);

void BM_FsgriBatch(benchmark::State& state) {
  tune_allocator();
  auto mc = reference();
  model::DualMixer m(mc);
  fsgri::FsgriConfig c;  // 21 anchors, 147 encodings
  data::WindowDataset ds;
  auto samples = windows(200, mc);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    samples[i].unit_id = 1;
    samples[i].anchor_index = i;
  }
  ds.samples = std::move(samples);
  ds.units = {{1, 0, 200}};
  Rng rng(4);
  std::vector<fsgri::ContrastiveGroup> groups;
  for (std::size_t k = 0; k < c.anchor_batch_size(); ++k) groups.push_back(fsgri::make_group(rng, ds, k * 9, c));
  for (auto _ : state) {
    m.parameters().zero_grad();
    Graph g(&m.parameters());
    g.backward(fsgri::fsgri_batch_loss(g, m, groups, c).total);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(c.encodings_per_batch()));
}
BENCHMARK(BM_FsgriBatch)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
