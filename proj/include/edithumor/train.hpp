#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "edithumor/corpus.hpp"
#include "edithumor/embed.hpp"
#include "edithumor/model.hpp"
#include "edithumor/optim.hpp"

namespace edithumor {

struct TrainConfig {
  int epochs = 100;
  int batch_size = 128;
  double learning_rate = 0.001;
  double rho = 0.9;
  double eps = 1e-8;
  int seq_len = 20;
  int hidden = 128;
  int embed_dim = 300;
  std::uint64_t seed = 42;
  bool shuffle = true;
  bool clamp_eval = true;
  SummaryMode summary = SummaryMode::kLast;
  bool output_relu = false;
  double clip_norm = 0.0;  // global-norm cap, 0 disables
  double bn_epsilon = 1e-3;
  double bn_momentum = 0.99;

  /// Throws ConfigError on a violated invariant.
  void validate() const;
  ModelConfig model(std::size_t vocab_size) const;
  RmspropConfig optimizer() const { return {learning_rate, rho, eps}; }

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct TrainState {
  TrainConfig config;
  ModelConfig model;
  ModelParams<float> params;
  RmspropState<float> optimizer;
  Rng rng;
  int epoch = 0;

  friend bool operator==(const TrainState&, const TrainState&) = default;
};

/// Seeds the PRNG from config.seed, draws the embedding (from `pretrained`
/// when given, else uniform), then the LSTM and head weights.
TrainState make_initial_state(const TrainConfig& config, const Vocab& vocab,
                              const std::filesystem::path* pretrained = nullptr,
                              CoverageReport* coverage = nullptr);

/// Same, with an embedding table already built from `rng`.
TrainState make_initial_state(const TrainConfig& config, Matrix<float> embedding, Rng rng);

Batch make_batch(std::span<const Example> examples, std::span<const std::size_t> indices,
                 std::size_t seq_len);

/// Infer-mode predictions in chunks of `batch_size`, optionally clamped to [0,3].
std::vector<float> predict(const ModelParams<float>& params, const ModelConfig& model,
                           std::span<const Example> examples, std::size_t batch_size, bool clamp);

/// Infer-mode MSE over labeled examples.
double evaluate_mse(const TrainState& state, std::span<const Example> examples);

struct HistoryRow {
  int epoch = 0;
  double train_mse = 0.0;
  std::optional<double> dev_rmse;

  friend bool operator==(const HistoryRow&, const HistoryRow&) = default;
};

struct TrainResult {
  TrainState last;
  TrainState best;  // lowest dev RMSE; equals `last` without a dev set
  std::vector<HistoryRow> history;
};

using EpochCallback = std::function<void(const HistoryRow&)>;

/// Runs state.config.epochs epochs of minibatch RMSprop on `train`. Every
/// example needs a target. A final partial batch of one example is dropped
/// (batch norm needs two rows). Throws NonFiniteLoss with epoch/step context.
TrainResult train(TrainState state, std::span<const Example> train_set,
                  std::span<const Example> dev_set = {}, const EpochCallback& on_epoch = {});

void write_history_csv(const std::filesystem::path& path, std::span<const HistoryRow> rows,
                       std::uint64_t seed);

std::vector<float> targets_of(std::span<const Example> examples);

}  // namespace edithumor
