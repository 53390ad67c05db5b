#include <benchmark/benchmark.h>

#include "semalign/analysis.hpp"
#include "semalign/linalg.hpp"
#include "semalign/model.hpp"
#include "semalign/rng.hpp"
#include "semalign/semantics.hpp"

namespace {

using namespace semalign;

Matrix random_matrix(std::size_t r, std::size_t c, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(r, c);
  for (auto& v : m.values()) v = rng.normal();
  return m;
}

TokenBatch random_batch(std::size_t batch, std::size_t seq, std::size_t vocab) {
  Rng rng(3);
  TokenBatch b;
  b.batch = batch;
  b.seq = seq;
  for (std::size_t i = 0; i < batch * seq; ++i) {
    b.input_ids.push_back(static_cast<std::int32_t>(rng.index(vocab)));
    b.target_ids.push_back(static_cast<std::int32_t>(rng.index(vocab)));
    b.supervised_mask.push_back(1);
  }
  return b;
}

LmConfig teacher_config() {
  return LmConfig{.n_layers = 8, .hidden_dim = 128, .n_heads = 4, .vocab_size = 512,
                  .max_seq = 16, .ffn_mult = 4, .seed = 1};
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Matrix a = random_matrix(n, n, 1), b = random_matrix(n, n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b));
  state.SetItemsProcessed(state.iterations() * 2 * n * n * n);
}
BENCHMARK(BM_Matmul)->Arg(64)->Arg(128)->Arg(256);

void BM_Svd(benchmark::State& state) {
  Matrix a = random_matrix(static_cast<std::size_t>(state.range(0)),
                           static_cast<std::size_t>(state.range(1)), 3);
  for (auto _ : state) benchmark::DoNotOptimize(svd(a));
}
BENCHMARK(BM_Svd)->Args({64, 64})->Args({64, 256})->Args({128, 512})->Unit(benchmark::kMillisecond);

void BM_OutputBases(benchmark::State& state) {
  Matrix head = random_matrix(128, 512, 4);
  for (auto _ : state) benchmark::DoNotOptimize(output_bases(head));
}
BENCHMARK(BM_OutputBases)->Unit(benchmark::kMillisecond);

void BM_Forward(benchmark::State& state) {
  LmParams p = init_lm(teacher_config());
  TokenBatch b = random_batch(static_cast<std::size_t>(state.range(0)), 14, 512);
  for (auto _ : state) benchmark::DoNotOptimize(forward(p, b));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(b.tokens()));
}
BENCHMARK(BM_Forward)->Arg(1)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_ForwardBackward(benchmark::State& state) {
  LmParams p = init_lm(teacher_config());
  TokenBatch b = random_batch(static_cast<std::size_t>(state.range(0)), 14, 512);
  for (auto _ : state) benchmark::DoNotOptimize(backward(p, b, cross_entropy_loss));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(b.tokens()));
}
BENCHMARK(BM_ForwardBackward)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_LinearCka(benchmark::State& state) {
  Matrix x = random_matrix(896, 128, 5), y = random_matrix(896, 64, 6);
  for (auto _ : state) benchmark::DoNotOptimize(linear_cka(x, y));
}
BENCHMARK(BM_LinearCka)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
