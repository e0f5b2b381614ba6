// Serial reference model vs the batched OpenMP kernels at the training
// shape (B=128, L=20, D=300, H=128). Thread count is the benchmark argument
// for the batched runs.

#include <benchmark/benchmark.h>

#include <random>

#include "edithumor/model.hpp"
#include "edithumor/optim.hpp"
#include "edithumor/parallel.hpp"
#include "edithumor/reference.hpp"

using namespace edithumor;

namespace {

struct Problem {
  ModelConfig cfg;
  ModelParams<float> params;
  Batch batch;
  std::vector<float> targets;
};

const Problem& problem() {
  static const Problem p = [] {
    Problem p;
    p.cfg.vocab_size = 5000;
    p.cfg.seq_len = 20;
    p.cfg.embed_dim = 300;
    p.cfg.hidden = 128;
    Rng rng(1);
    p.params = init_params<float>(p.cfg, random_embedding(p.cfg.vocab_size, p.cfg.embed_dim, rng), rng);
    std::uniform_int_distribution<int> tok(1, 4999), len(4, 20);
    std::uniform_real_distribution<float> grade(0.0f, 3.0f);
    p.batch.size = 128;
    p.batch.seq_len = 20;
    for (int b = 0; b < 128; ++b) {
      const int n = len(rng);
      p.batch.lengths.push_back(n);
      for (int t = 0; t < 20; ++t) p.batch.tokens.push_back(t < n ? tok(rng) : kPadId);
      p.targets.push_back(grade(rng));
    }
    return p;
  }();
  return p;
}

void BM_ReferenceForward(benchmark::State& state) {
  const auto& p = problem();
  for (auto _ : state) {
    auto r = reference::forward(p.params, p.cfg, p.batch, Mode::kTrain);
    benchmark::DoNotOptimize(r.predictions.data());
  }
}

void BM_BatchedForward(benchmark::State& state) {
  const auto& p = problem();
  kernels::set_threads(static_cast<int>(state.range(0)));
  ForwardCache<float> cache;
  for (auto _ : state) {
    auto y = model_forward(p.params, p.cfg, p.batch, Mode::kTrain, cache);
    benchmark::DoNotOptimize(y.data());
  }
}

void BM_ReferenceForwardBackward(benchmark::State& state) {
  const auto& p = problem();
  ModelGrads<float> g(p.cfg);
  for (auto _ : state) {
    g.clear();
    auto loss = reference::loss_and_grads<float>(p.params, p.cfg, p.batch, p.targets, g);
    benchmark::DoNotOptimize(loss);
  }
}

void BM_BatchedForwardBackward(benchmark::State& state) {
  const auto& p = problem();
  kernels::set_threads(static_cast<int>(state.range(0)));
  ForwardCache<float> cache;
  ModelGrads<float> g(p.cfg);
  for (auto _ : state) {
    g.clear();
    auto y = model_forward(p.params, p.cfg, p.batch, Mode::kTrain, cache);
    auto loss = mse_loss<float>(y, p.targets);
    model_backward(p.params, p.cfg, p.batch, cache, std::span<const float>(loss.grad), g);
    benchmark::DoNotOptimize(g.head.bias);
  }
}

}  // namespace

BENCHMARK(BM_ReferenceForward)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BatchedForward)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ReferenceForwardBackward)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BatchedForwardBackward)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
