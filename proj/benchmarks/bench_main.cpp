#include <benchmark/benchmark.h>

#include <numbers>
#include <vector>

#include "forgepipe/evalmetrics.hpp"
#include "forgepipe/geometry.hpp"
#include "forgepipe/head.hpp"
#include "forgepipe/losses.hpp"
#include "forgepipe/rng.hpp"

namespace {

using namespace forgepipe;

void BM_Iou(benchmark::State& state) {
  Rng rng(1);
  std::vector<BoundingBox> boxes;
  for (int i = 0; i < 256; ++i) {
    const double x = rng.uniform(0.0, 500.0);
    const double y = rng.uniform(0.0, 500.0);
    boxes.push_back({x, y, rng.uniform(10.0, 100.0), rng.uniform(10.0, 100.0)});
  }
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(iou(boxes[i % 256], boxes[(i * 7 + 3) % 256]));
    ++i;
  }
}
BENCHMARK(BM_Iou);

void BM_EstimateSimilarity(benchmark::State& state) {
  Rng rng(2);
  const SimilarityTransform t{1.7, 0.4, 12.0, -5.0};
  LandmarkSet5 src;
  LandmarkSet5 dst;
  for (std::size_t i = 0; i < 5; ++i) {
    src[i] = {rng.uniform(0.0, 224.0), rng.uniform(0.0, 224.0)};
    dst[i] = t.apply(src[i]);
  }
  for (auto _ : state) benchmark::DoNotOptimize(estimate_similarity(src, dst));
}
BENCHMARK(BM_EstimateSimilarity);

void BM_WarpFrame(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  Rng rng(3);
  Image frame(640, 480);
  for (auto& v : frame.pixels) v = static_cast<float>(rng.uniform());
  const SimilarityTransform t{0.8, 0.1, -40.0, -30.0};
  for (auto _ : state) benchmark::DoNotOptimize(warp_frame(frame, t, side, side));
  state.SetItemsProcessed(state.iterations() * side * side);
}
BENCHMARK(BM_WarpFrame)->Arg(64)->Arg(224);

void BM_RocAuc(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(4);
  std::vector<double> scores(n);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    scores[i] = rng.uniform();
    labels[i] = static_cast<int>(i % 2);
  }
  for (auto _ : state) benchmark::DoNotOptimize(roc_auc(scores, labels));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_RocAuc)->Arg(1000)->Arg(100000);

std::vector<float> random_input(Rng& rng, std::size_t d) {
  std::vector<float> x(d);
  for (auto& v : x) v = static_cast<float>(rng.normal());
  return x;
}

void BM_HeadForward(benchmark::State& state) {
  Rng rng(5);
  const auto params = init_head(4096, 512, 128, 5);
  const auto x = random_input(rng, 4096);
  for (auto _ : state) benchmark::DoNotOptimize(forward(params, x));
}
BENCHMARK(BM_HeadForward);

void BM_HeadBackward(benchmark::State& state) {
  Rng rng(6);
  const auto params = init_head(4096, 512, 128, 6);
  const auto x = random_input(rng, 4096);
  for (auto _ : state) benchmark::DoNotOptimize(backward(params, x, 1));
}
BENCHMARK(BM_HeadBackward);

void BM_CombinedLoss(benchmark::State& state) {
  const auto k = static_cast<std::size_t>(state.range(0));
  constexpr std::size_t d = 256;
  Rng rng(7);
  auto draw = [&] {
    Vec v(d);
    for (auto& x : v) x = rng.normal();
    return v;
  };
  ContrastiveBatch batch;
  for (std::size_t i = 0; i < k; ++i) {
    ContrastiveEntry e;
    e.visual_va = draw();
    e.audio_va = draw();
    e.visual_vat = draw();
    e.text = {draw(), draw()};
    batch.entries.push_back(std::move(e));
  }
  const LossConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(combined_loss(batch, cfg));
}
BENCHMARK(BM_CombinedLoss)->Arg(8)->Arg(64);

}  // namespace

BENCHMARK_MAIN();
