#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "edithumor/batchnorm.hpp"
#include "edithumor/embed.hpp"
#include "edithumor/head.hpp"
#include "edithumor/lstm.hpp"
#include "edithumor/text.hpp"

namespace edithumor {

struct ModelConfig {
  std::size_t vocab_size = 0;
  std::size_t seq_len = 20;
  std::size_t embed_dim = 300;
  std::size_t hidden = 128;
  SummaryMode summary = SummaryMode::kLast;
  bool output_relu = false;
  double bn_epsilon = 1e-3;
  double bn_momentum = 0.99;

  std::size_t features() const { return 2 * hidden; }

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// Embedding -> BiLSTM -> batch norm -> linear head.
template <typename T>
struct ModelParams {
  Matrix<T> embedding;  // vocab x D, row kPadId frozen at zero
  BiLstmParams<T> lstm;
  BatchNormParams<T> bn;
  HeadParams<T> head;

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

template <typename T>
struct ModelGrads {
  Matrix<T> embedding;
  std::vector<TokenId> touched_rows;  // sorted, distinct, excludes PAD
  BiLstmParams<T> lstm;
  BatchNormGrads<T> bn;
  HeadParams<T> head;

  ModelGrads() = default;
  explicit ModelGrads(const ModelConfig& cfg)
      : embedding(cfg.vocab_size, cfg.embed_dim),
        lstm{LstmDirectionParams<T>(cfg.embed_dim, cfg.hidden),
             LstmDirectionParams<T>(cfg.embed_dim, cfg.hidden)},
        bn{std::vector<T>(cfg.features(), T{}), std::vector<T>(cfg.features(), T{})},
        head{std::vector<T>(cfg.features(), T{}), T{}} {}

  /// Zeroes everything; embedding rows are cleared only where touched.
  void clear() {
    for (const TokenId id : touched_rows) {
      T* row = embedding.row(static_cast<std::size_t>(id));
      std::fill(row, row + embedding.cols(), T{});
    }
    touched_rows.clear();
    for (auto* dir : {&lstm.forward, &lstm.backward}) {
      dir->W.fill(T{});
      dir->V.fill(T{});
      std::fill(dir->b.begin(), dir->b.end(), T{});
    }
    std::fill(bn.gamma.begin(), bn.gamma.end(), T{});
    std::fill(bn.beta.begin(), bn.beta.end(), T{});
    std::fill(head.weight.begin(), head.weight.end(), T{});
    head.bias = T{};
  }
};

// Named flat view of one trainable tensor.
template <typename T>
struct TensorView {
  std::string name;
  std::span<T> values;
  std::vector<std::size_t> shape;
};

/// Trainable tensors in a fixed order: embedding, forward W/V/b, backward
/// W/V/b, bn gamma/beta, head weight/bias. Works for params and grads.
template <typename T, typename P>
std::vector<TensorView<T>> trainable_views(P& p) {
  std::vector<TensorView<T>> v;
  v.push_back({"embedding", p.embedding.span(), {p.embedding.rows(), p.embedding.cols()}});
  auto dir = [&](const char* prefix, auto& d) {
    const std::string s(prefix);
    v.push_back({s + ".W", d.W.span(), {d.W.rows(), d.W.cols()}});
    v.push_back({s + ".V", d.V.span(), {d.V.rows(), d.V.cols()}});
    v.push_back({s + ".b", std::span<T>(d.b), {d.b.size()}});
  };
  dir("lstm.forward", p.lstm.forward);
  dir("lstm.backward", p.lstm.backward);
  v.push_back({"bn.gamma", std::span<T>(p.bn.gamma), {p.bn.gamma.size()}});
  v.push_back({"bn.beta", std::span<T>(p.bn.beta), {p.bn.beta.size()}});
  v.push_back({"head.weight", std::span<T>(p.head.weight), {p.head.weight.size()}});
  v.push_back({"head.bias", std::span<T>(&p.head.bias, 1), {}});
  return v;
}

/// Glorot-uniform weights, zero biases except the forget-gate slice (1.0),
/// batch norm gamma 1 / beta 0 / running (0, 1). The embedding is supplied.
template <typename T>
ModelParams<T> init_params(const ModelConfig& cfg, Matrix<T> embedding, Rng& rng) {
  require_shape(embedding, cfg.vocab_size, cfg.embed_dim, "embedding");
  ModelParams<T> p;
  p.embedding = std::move(embedding);
  auto glorot = [&rng](Matrix<T>& m, std::size_t fan_in, std::size_t fan_out) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (auto& x : m.span()) x = static_cast<T>(dist(rng));
  };
  for (auto* dir : {&p.lstm.forward, &p.lstm.backward}) {
    *dir = LstmDirectionParams<T>(cfg.embed_dim, cfg.hidden);
    glorot(dir->W, cfg.embed_dim, 4 * cfg.hidden);
    glorot(dir->V, cfg.hidden, 4 * cfg.hidden);
    for (std::size_t j = 0; j < cfg.hidden; ++j) dir->b[kForgetGate * cfg.hidden + j] = T(1);
  }
  p.bn = BatchNormParams<T>(cfg.features(), static_cast<T>(cfg.bn_epsilon),
                            static_cast<T>(cfg.bn_momentum));
  p.head.weight.assign(cfg.features(), T{});
  Matrix<T> w(1, cfg.features());
  glorot(w, cfg.features(), 1);
  std::copy(w.data(), w.data() + w.size(), p.head.weight.begin());
  p.head.bias = T{};
  return p;
}

template <typename U, typename T>
ModelParams<U> cast_params(const ModelParams<T>& p) {
  ModelParams<U> q;
  q.embedding = cast_matrix<U>(p.embedding);
  auto dir = [](const LstmDirectionParams<T>& d) {
    LstmDirectionParams<U> e;
    e.W = cast_matrix<U>(d.W);
    e.V = cast_matrix<U>(d.V);
    e.b = cast_vector<U>(d.b);
    return e;
  };
  q.lstm.forward = dir(p.lstm.forward);
  q.lstm.backward = dir(p.lstm.backward);
  q.bn.gamma = cast_vector<U>(p.bn.gamma);
  q.bn.beta = cast_vector<U>(p.bn.beta);
  q.bn.running_mean = cast_vector<U>(p.bn.running_mean);
  q.bn.running_var = cast_vector<U>(p.bn.running_var);
  q.bn.epsilon = static_cast<U>(p.bn.epsilon);
  q.bn.momentum = static_cast<U>(p.bn.momentum);
  q.head.weight = cast_vector<U>(p.head.weight);
  q.head.bias = static_cast<U>(p.head.bias);
  return q;
}

// Token ids of B fixed-length sequences, row-major B x L.
struct Batch {
  std::size_t size = 0;
  std::size_t seq_len = 0;
  std::vector<TokenId> tokens;
  std::vector<int> lengths;
};

template <typename T>
struct ForwardCache {
  Matrix<T> x;  // (B*L) x D
  BiLstmCache<T> lstm;
  Matrix<T> summary;
  BatchNormCache<T> bn;
  Matrix<T> normalized;
  std::vector<T> head_pre;
};

/// Predictions for a batch. Deterministic given params and mode.
template <typename T>
std::vector<T> model_forward(const ModelParams<T>& p, const ModelConfig& cfg, const Batch& batch,
                             Mode mode, ForwardCache<T>& cache) {
  require_size(batch.seq_len, cfg.seq_len, "batch sequence length");
  require_size(batch.tokens.size(), batch.size * batch.seq_len, "batch tokens");
  require_size(batch.lengths.size(), batch.size, "batch lengths");
  require_shape(p.embedding, cfg.vocab_size, cfg.embed_dim, "embedding");

  cache.x = lookup_sequence(p.embedding, std::span<const TokenId>(batch.tokens));
  cache.summary = bilstm_forward(p.lstm, cache.x, batch.size, batch.seq_len,
                                 std::span<const int>(batch.lengths), cfg.summary, cache.lstm);
  cache.normalized = batchnorm_forward(cache.summary, p.bn, mode, cache.bn);
  return head_forward(cache.normalized, p.head, cfg.output_relu, &cache.head_pre);
}

template <typename T>
std::vector<T> model_forward(const ModelParams<T>& p, const ModelConfig& cfg, const Batch& batch,
                             Mode mode) {
  ForwardCache<T> cache;
  return model_forward(p, cfg, batch, mode, cache);
}

/// Adds dL/dparams into `grads` given dL/dprediction. Gradient reaching the
/// PAD embedding row is dropped.
template <typename T>
void model_backward(const ModelParams<T>& p, const ModelConfig& cfg, const Batch& batch,
                    const ForwardCache<T>& cache, std::span<const T> dpred, ModelGrads<T>& grads) {
  const Matrix<T> dnorm = head_backward(cache.normalized, p.head, dpred, grads.head,
                                        cfg.output_relu, std::span<const T>(cache.head_pre));
  const Matrix<T> dsummary = batchnorm_backward(dnorm, p.bn, cache.bn, grads.bn);
  const Matrix<T> dx = bilstm_backward(p.lstm, cache.x, cache.lstm, dsummary, grads.lstm);

  // Scatter in (b, t) order so repeated tokens accumulate deterministically.
  const std::size_t dim = cfg.embed_dim;
  std::vector<char> seen(cfg.vocab_size, 0);
  for (const TokenId id : grads.touched_rows) seen[static_cast<std::size_t>(id)] = 1;
  for (std::size_t n = 0; n < batch.tokens.size(); ++n) {
    const TokenId id = batch.tokens[n];
    if (id == kPadId) continue;
    T* g = grads.embedding.row(static_cast<std::size_t>(id));
    const T* d = dx.row(n);
    for (std::size_t k = 0; k < dim; ++k) g[k] += d[k];
    if (!seen[static_cast<std::size_t>(id)]) {
      seen[static_cast<std::size_t>(id)] = 1;
      grads.touched_rows.push_back(id);
    }
  }
  std::sort(grads.touched_rows.begin(), grads.touched_rows.end());
}

}  // namespace edithumor
