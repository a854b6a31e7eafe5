#include <benchmark/benchmark.h>

#include <random>

#include "radmark/architectures.hpp"
#include "radmark/carriers.hpp"
#include "radmark/marker.hpp"
#include "radmark/toy_data.hpp"
#include "radmark/verify.hpp"

using namespace radmark;

namespace {

void BM_CosinePvalue(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  double c = -0.9;
  for (auto _ : state) {
    benchmark::DoNotOptimize(cosine_log10_pvalue(c, d));
    c = c > 0.9 ? -0.9 : c + 0.01;
  }
}
BENCHMARK(BM_CosinePvalue)->Arg(8)->Arg(128)->Arg(2048);

void BM_FeatureForward(benchmark::State& state) {
  const ImageShape shape{3, 32, 32};
  auto net = build_architecture("desk_cnn", shape, 8);
  net.init(1);
  const auto imgs = make_natural_pool(static_cast<int>(state.range(0)), shape, 2);
  const ImageBatch batch = to_batch(imgs);
  for (auto _ : state) benchmark::DoNotOptimize(net.features(batch));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_FeatureForward)->Arg(32)->Unit(benchmark::kMillisecond);

// One marking chunk of 32 images for 10 steps (the default runs 200).
void BM_EmbedChunk(benchmark::State& state) {
  const ImageShape shape{3, 32, 32};
  auto net = build_architecture("desk_cnn", shape, 8);
  net.init(1);
  const ImageBatch x = to_batch(make_natural_pool(32, shape, 3));
  const auto carriers = generate_carriers(1, net.feature_dim(), 4);
  const Eigen::MatrixXd u = carriers.vectors.row(0).replicate(32, 1);
  EmbedParams p;
  p.steps = 10;
  for (auto _ : state) benchmark::DoNotOptimize(embed_batch(x, u, net, p));
}
BENCHMARK(BM_EmbedChunk)->Unit(benchmark::kMillisecond);

void BM_AlignRows(benchmark::State& state) {
  const auto n = state.range(0);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  Eigen::MatrixXd m(n, 128), s(n, 128);
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    m.data()[i] = g(rng);
    s.data()[i] = g(rng);
  }
  for (auto _ : state) benchmark::DoNotOptimize(align_feature_rows(s, m));
}
BENCHMARK(BM_AlignRows)->Arg(640)->Arg(5000)->Unit(benchmark::kMillisecond);

void BM_SweepFromLosses(benchmark::State& state) {
  std::mt19937_64 rng(6);
  std::exponential_distribution<double> e;
  std::vector<LossPair> losses(static_cast<std::size_t>(state.range(0)));
  for (std::size_t i = 0; i < losses.size(); ++i) losses[i] = {0, i, e(rng), e(rng)};
  std::vector<std::size_t> budgets;
  for (std::size_t b = 1; b <= losses.size(); b *= 2) budgets.push_back(b);
  for (auto _ : state) benchmark::DoNotOptimize(sweep_from_losses(losses, budgets));
}
BENCHMARK(BM_SweepFromLosses)->Arg(640)->Arg(10000);

}  // namespace

BENCHMARK_MAIN();
