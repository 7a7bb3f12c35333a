#include <dreamhone/dream.hpp>
#include <dreamhone/network.hpp>
#include <dreamhone/patches.hpp>
#include <dreamhone/synthetic.hpp>

#include <benchmark/benchmark.h>

using namespace dreamhone;

namespace {

Tensor random_input(const Shape& dims, std::uint64_t seed) {
  Rng rng(seed);
  Tensor t(dims);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<float>(rng.uniform());
  return t;
}

void BM_ConvForward(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  const auto hw = static_cast<std::size_t>(state.range(1));
  Rng rng(1);
  ConvParams p;
  p.out_channels = c;
  p.in_channels = c;
  p.kernel_h = 3;
  p.kernel_w = 3;
  p.pad = 1;
  p.weights = Tensor({c, c, 3, 3});
  p.bias = Tensor({c});
  for (std::size_t i = 0; i < p.weights.size(); ++i) p.weights[i] = static_cast<float>(rng.uniform(-0.1, 0.1));
  const Tensor x = random_input({c, hw, hw}, 2);
  for (auto _ : state) benchmark::DoNotOptimize(conv2d(x, p));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(c * c * 9 * hw * hw));
}
BENCHMARK(BM_ConvForward)->Args({16, 64})->Args({32, 32})->Args({64, 16});

void BM_BackpropToInput(benchmark::State& state) {
  const Network net = Network::reference(3, 1);
  const Tensor x = random_input({3, 64, 64}, 3);
  const std::span<const LayerSpec> all = net.layers();
  const auto prefix = all.first(net.layer_index("relu2") + 1);
  const Tensor up = random_input(net.layer_dims("relu2"), 4);
  for (auto _ : state) benchmark::DoNotOptimize(backprop_to_input<float>(prefix, x, up));
}
BENCHMARK(BM_BackpropToInput);

PatchGrid random_grid(std::size_t side, std::size_t length, std::uint64_t seed) {
  Rng rng(seed);
  PatchGrid g;
  g.layer_name = "relu2";
  g.patch_size = 3;
  g.rows = side;
  g.cols = side;
  g.vector_length = length;
  g.values.resize(side * side * length);
  for (auto& v : g.values) v = static_cast<float>(rng.uniform());
  return g;
}

void BM_MatchPatches(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0));
  const PatchGrid a = random_grid(side, 288, 5);
  const PatchGrid b = random_grid(side, 288, 6);
  for (auto _ : state) benchmark::DoNotOptimize(match_patches(a, b, LossMode::DistMin));
}
BENCHMARK(BM_MatchPatches)->Arg(10)->Arg(30);

void BM_DreamStep(benchmark::State& state) {
  const Network net = Network::reference(3, 1);
  const Tensor source = random_texture(TextureKind::HorizontalStripes, 64, 64, 7);
  const PatchGrid guide = encode_patches(net, random_texture(TextureKind::Checker, 64, 64, 8), "relu2", 3);
  DreamConfig cfg;
  cfg.mode = LossMode::DistMin;
  Rng rng(9);
  for (auto _ : state) benchmark::DoNotOptimize(dream_step(net, source, &guide, cfg, rng));
}
BENCHMARK(BM_DreamStep);

}  // namespace

BENCHMARK_MAIN();
