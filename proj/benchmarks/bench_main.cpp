// SPDX-License-Identifier: Apache-2.0
//
// Microbenchmarks for the numeric hot paths: cell updates, gradient passes,
// article encoding and the rank aggregation used by the backtest.

#include <benchmark/benchmark.h>

#include <vector>

#include "stylerec/dynamic_model.hpp"
#include "stylerec/evaluation.hpp"
#include "stylerec/numerics.hpp"
#include "stylerec/ranking.hpp"
#include "stylerec/rng.hpp"
#include "stylerec/static_model.hpp"

using namespace stylerec;

namespace {

Vec random_vec(std::size_t n, Rng& rng) {
  Vec v(n);
  for (auto& x : v) x = rng.gaussian();
  return v;
}

void BM_Sigmoid(benchmark::State& state) {
  Rng rng(1);
  const Vec xs = random_vec(1024, rng);
  for (auto _ : state) {
    double acc = 0.0;
    for (const double x : xs) acc += sigmoid(x);
    benchmark::DoNotOptimize(acc);
  }
  state.SetItemsProcessed(state.iterations() * 1024);
}
BENCHMARK(BM_Sigmoid);

void BM_Affine(benchmark::State& state) {
  const std::size_t rows = static_cast<std::size_t>(state.range(0));
  const std::size_t cols = static_cast<std::size_t>(state.range(1));
  Rng rng(2);
  Mat w(rows, cols);
  for (auto& x : w.data) x = rng.gaussian();
  const Vec b = random_vec(rows, rng);
  const Vec x = random_vec(cols, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(affine(w, b, x));
  }
  state.SetItemsProcessed(state.iterations() * rows * cols);
}
BENCHMARK(BM_Affine)->Args({256, 390})->Args({1024, 390});

void BM_LstmStepPaperScale(benchmark::State& state) {
  Rng rng(3);
  const LstmParams p = init_lstm(256, 128, TimeEncoding::annual_phase, rng);
  const Vec x = random_vec(p.input_dim(), rng);
  LstmState st = zero_state(p);
  for (auto _ : state) {
    st = lstm_step(p, st, x);
    benchmark::DoNotOptimize(st.hidden.data());
  }
}
BENCHMARK(BM_LstmStepPaperScale);

void BM_BpttSequence(benchmark::State& state) {
  const std::size_t steps = static_cast<std::size_t>(state.range(0));
  Rng rng(4);
  const LstmParams p = init_lstm(64, 32, TimeEncoding::annual_phase, rng);
  MaskedSequence ms;
  ms.seq.customer = "c";
  std::vector<std::vector<Vec>> pools(steps);
  Minutes t = 1000;
  for (std::size_t i = 0; i < steps; ++i) {
    t += 10000;
    ms.seq.events.push_back({"a", t, random_vec(32, rng)});
  }
  ms.mask.assign(steps, true);
  ms.negatives.resize(steps);
  for (std::size_t i = 0; i < steps; ++i) {
    for (int j = 0; j < 20; ++j) pools[i].push_back(random_vec(32, rng));
    for (const auto& v : pools[i]) ms.negatives[i].push_back(&v);
  }
  const std::vector<MaskedSequence> batch{ms};
  for (auto _ : state) {
    double loss = 0.0;
    benchmark::DoNotOptimize(bptt_gradients(p, batch, LossKind::rank, &loss));
    benchmark::DoNotOptimize(loss);
  }
  state.SetItemsProcessed(state.iterations() * steps);
}
BENCHMARK(BM_BpttSequence)->Arg(8)->Arg(43);

void BM_EncodeArticle(benchmark::State& state) {
  Rng rng(5);
  EncoderParams enc;
  enc.layers.push_back({Mat(256, 69), Vec(256, 0.0), Activation::rectifier});
  for (auto& x : enc.layers[0].w.data) x = 0.1 * rng.gaussian();
  enc.layers.push_back({Mat(128, 256), Vec(128, 0.0), Activation::identity});
  for (auto& x : enc.layers[1].w.data) x = 0.1 * rng.gaussian();
  const Vec features = random_vec(69, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(encode_article(enc, features));
  }
}
BENCHMARK(BM_EncodeArticle);

void BM_CumulativeRank(benchmark::State& state) {
  const std::size_t z = static_cast<std::size_t>(state.range(0));
  Rng rng(6);
  std::vector<std::size_t> ranks;
  for (int i = 0; i < 100000; ++i)
    ranks.push_back(1 + static_cast<std::size_t>(rng.below(z)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(cumulative_rank(ranks, z));
  }
  state.SetItemsProcessed(state.iterations() * ranks.size());
}
BENCHMARK(BM_CumulativeRank)->Arg(190000);

void BM_RankByScore(benchmark::State& state) {
  const std::size_t z = static_cast<std::size_t>(state.range(0));
  Rng rng(7);
  std::vector<double> scores(z);
  std::vector<std::string> ids(z);
  for (std::size_t i = 0; i < z; ++i) {
    scores[i] = rng.gaussian();
    ids[i] = "a" + std::to_string(i);
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(rank_by_score(scores, ids));
  }
}
BENCHMARK(BM_RankByScore)->Arg(3000)->Arg(190000);

}  // namespace

BENCHMARK_MAIN();
