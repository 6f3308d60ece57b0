#include <benchmark/benchmark.h>

#include <random>

#include "ddcam/ddmin.hpp"
#include "ddcam/explain.hpp"
#include "ddcam/saliency.hpp"

namespace {

using namespace ddcam;

Tensor random_tensor(std::mt19937_64& rng, Shape shape) {
  std::uniform_real_distribution<float> dist(0.0F, 1.0F);
  Tensor t(std::move(shape));
  for (float& v : t.data()) v = dist(rng);
  return t;
}

Classifier required_subset(std::size_t m) {
  UnitSet required(m);
  for (std::size_t i = 0; i < m; i += 7) required.insert(i);
  return [required](const UnitSet& s) -> std::size_t { return required.is_subset_of(s) ? 0 : 1; };
}

void BM_GeneralSearch(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const auto f = required_subset(m);
  for (auto _ : state) {
    PredictionOracle oracle(m, f);
    benchmark::DoNotOptimize(find_minimal_general(oracle));
  }
}
BENCHMARK(BM_GeneralSearch)->Arg(64)->Arg(512)->Arg(2048);

void BM_OnePassSearch(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const auto f = required_subset(m);
  for (auto _ : state) {
    PredictionOracle oracle(m, f);
    benchmark::DoNotOptimize(find_minimal_onepass(oracle));
  }
}
BENCHMARK(BM_OnePassSearch)->Arg(64)->Arg(512)->Arg(2048);

void BM_LinearHeadExplain(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const auto k = static_cast<std::size_t>(state.range(0));
  LinearHead head{random_tensor(rng, {10, k}), std::vector<float>(10, 0.0F)};
  for (float& w : head.weight.data()) w -= 0.5F;
  const auto acts = random_tensor(rng, {k, 7, 7});
  for (auto _ : state) {
    auto oracle = make_head_oracle(head, acts);
    benchmark::DoNotOptimize(find_minimal_onepass(oracle));
  }
}
BENCHMARK(BM_LinearHeadExplain)->Arg(64)->Arg(512)->Unit(benchmark::kMillisecond);

void BM_Upsample(benchmark::State& state) {
  std::mt19937_64 rng(2);
  const auto small = random_tensor(rng, {7, 7});
  for (auto _ : state) benchmark::DoNotOptimize(bilinear_upsample(small, 224, 224));
}
BENCHMARK(BM_Upsample);

void BM_ComposeCnnMap(benchmark::State& state) {
  std::mt19937_64 rng(3);
  const auto acts = random_tensor(rng, {512, 7, 7});
  UnitSet selected(512);
  for (std::size_t i = 0; i < 512; i += 16) selected.insert(i);
  const std::vector<double> w(selected.size(), 1.0 / static_cast<double>(selected.size()));
  for (auto _ : state) benchmark::DoNotOptimize(compose_cnn_map(acts, selected, w, 224, 224));
}
BENCHMARK(BM_ComposeCnnMap);

}  // namespace
BENCHMARK_MAIN();
