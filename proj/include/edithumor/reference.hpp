#pragma once

// Serial reference model: one example and one time step at a time, built on
// the single-cell functions. Kept for tests and benchmarks; the training
// path uses the batched kernels in lstm.hpp / batchnorm.hpp / head.hpp.

#include <cmath>
#include <span>
#include <vector>

#include "edithumor/model.hpp"

namespace edithumor::reference {

template <typename T>
struct ExampleTrace {
  std::vector<CellStep<T>> fwd;  // index t
  std::vector<CellStep<T>> bwd;  // index t (scan ran t = L-1 .. 0)
  std::vector<T> summary;
};

template <typename T>
ExampleTrace<T> run_example(const ModelParams<T>& p, const ModelConfig& cfg,
                            std::span<const TokenId> tokens, int length) {
  const std::size_t steps = cfg.seq_len;
  const std::size_t hidden = cfg.hidden;
  ExampleTrace<T> tr;
  tr.fwd.resize(steps);
  tr.bwd.resize(steps);
  std::vector<T> zero(hidden, T{});

  auto x_at = [&](std::size_t t) {
    const T* row = p.embedding.row(static_cast<std::size_t>(tokens[t]));
    return std::vector<T>(row, row + cfg.embed_dim);
  };
  for (std::size_t t = 0; t < steps; ++t) {
    const auto x = x_at(t);
    const auto& hp = t == 0 ? zero : tr.fwd[t - 1].h;
    const auto& cp = t == 0 ? zero : tr.fwd[t - 1].c;
    tr.fwd[t] = lstm_cell_forward<T>(x, hp, cp, p.lstm.forward);
  }
  for (std::size_t t = steps; t-- > 0;) {
    const auto x = x_at(t);
    const auto& hp = t + 1 == steps ? zero : tr.bwd[t + 1].h;
    const auto& cp = t + 1 == steps ? zero : tr.bwd[t + 1].c;
    tr.bwd[t] = lstm_cell_forward<T>(x, hp, cp, p.lstm.backward);
  }

  tr.summary.assign(2 * hidden, T{});
  const auto len = static_cast<std::size_t>(length);
  if (len == 0) return tr;
  if (cfg.summary == SummaryMode::kLast) {
    for (std::size_t j = 0; j < hidden; ++j) {
      tr.summary[j] = tr.fwd[len - 1].h[j];
      tr.summary[hidden + j] = tr.bwd[0].h[j];
    }
  } else {
    for (std::size_t t = 0; t < len; ++t) {
      for (std::size_t j = 0; j < hidden; ++j) {
        tr.summary[j] += tr.fwd[t].h[j] / static_cast<T>(len);
        tr.summary[hidden + j] += tr.bwd[t].h[j] / static_cast<T>(len);
      }
    }
  }
  return tr;
}

template <typename T>
struct ReferenceResult {
  std::vector<T> predictions;
  std::vector<std::vector<T>> summaries;
  std::vector<T> batch_mean, batch_var;
};

template <typename T>
ReferenceResult<T> forward(const ModelParams<T>& p, const ModelConfig& cfg, const Batch& batch,
                           Mode mode, std::vector<ExampleTrace<T>>* traces = nullptr) {
  const std::size_t feats = cfg.features();
  const std::size_t n = batch.size;
  ReferenceResult<T> r;
  for (std::size_t b = 0; b < n; ++b) {
    auto tr = run_example(p, cfg,
                          std::span<const TokenId>(batch.tokens).subspan(b * cfg.seq_len, cfg.seq_len),
                          batch.lengths[b]);
    r.summaries.push_back(tr.summary);
    if (traces) traces->push_back(std::move(tr));
  }
  r.batch_mean.assign(feats, T{});
  r.batch_var.assign(feats, T{});
  for (std::size_t f = 0; f < feats; ++f) {
    if (mode == Mode::kTrain) {
      for (std::size_t b = 0; b < n; ++b) r.batch_mean[f] += r.summaries[b][f];
      r.batch_mean[f] /= static_cast<T>(n);
      for (std::size_t b = 0; b < n; ++b) {
        const T d = r.summaries[b][f] - r.batch_mean[f];
        r.batch_var[f] += d * d;
      }
      r.batch_var[f] /= static_cast<T>(n);
    } else {
      r.batch_mean[f] = p.bn.running_mean[f];
      r.batch_var[f] = p.bn.running_var[f];
    }
  }
  for (std::size_t b = 0; b < n; ++b) {
    T y = p.head.bias;
    for (std::size_t f = 0; f < feats; ++f) {
      const T xhat = (r.summaries[b][f] - r.batch_mean[f]) / std::sqrt(r.batch_var[f] + p.bn.epsilon);
      y += p.head.weight[f] * (p.bn.gamma[f] * xhat + p.bn.beta[f]);
    }
    if (cfg.output_relu && y < T{}) y = T{};
    r.predictions.push_back(y);
  }
  return r;
}

/// Train-mode MSE and its full gradient, computed without the batched
/// kernels. Returns the loss.
template <typename T>
T loss_and_grads(const ModelParams<T>& p, const ModelConfig& cfg, const Batch& batch,
                 std::span<const T> targets, ModelGrads<T>& grads) {
  const std::size_t feats = cfg.features();
  const std::size_t hidden = cfg.hidden;
  const std::size_t n = batch.size;
  std::vector<ExampleTrace<T>> traces;
  const auto r = forward(p, cfg, batch, Mode::kTrain, &traces);

  T loss{};
  std::vector<T> dy(n);
  for (std::size_t b = 0; b < n; ++b) {
    const T diff = r.predictions[b] - targets[b];
    loss += diff * diff;
    dy[b] = T(2) * diff / static_cast<T>(n);
    if (cfg.output_relu && r.predictions[b] <= T{}) dy[b] = T{};
  }
  loss /= static_cast<T>(n);

  // Head and batch norm, feature by feature.
  std::vector<std::vector<T>> dsummary(n, std::vector<T>(feats, T{}));
  for (std::size_t f = 0; f < feats; ++f) {
    const T inv = T(1) / std::sqrt(r.batch_var[f] + p.bn.epsilon);
    std::vector<T> xhat(n), dxhat(n);
    T mean_dxhat{}, mean_dxhat_xhat{};
    for (std::size_t b = 0; b < n; ++b) {
      xhat[b] = (r.summaries[b][f] - r.batch_mean[f]) * inv;
      const T bn_out = p.bn.gamma[f] * xhat[b] + p.bn.beta[f];
      grads.head.weight[f] += dy[b] * bn_out;
      const T dbn = dy[b] * p.head.weight[f];
      grads.bn.gamma[f] += dbn * xhat[b];
      grads.bn.beta[f] += dbn;
      dxhat[b] = dbn * p.bn.gamma[f];
      mean_dxhat += dxhat[b] / static_cast<T>(n);
      mean_dxhat_xhat += dxhat[b] * xhat[b] / static_cast<T>(n);
    }
    for (std::size_t b = 0; b < n; ++b) {
      dsummary[b][f] = inv * (dxhat[b] - mean_dxhat - xhat[b] * mean_dxhat_xhat);
    }
  }
  for (std::size_t b = 0; b < n; ++b) grads.head.bias += dy[b];

  // BPTT, one example at a time.
  const std::size_t steps = cfg.seq_len;
  for (std::size_t b = 0; b < n; ++b) {
    const auto len = static_cast<std::size_t>(batch.lengths[b]);
    if (len == 0) continue;
    const auto& tr = traces[b];
    std::vector<std::vector<T>> dh_f(steps, std::vector<T>(hidden, T{}));
    std::vector<std::vector<T>> dh_b(steps, std::vector<T>(hidden, T{}));
    if (cfg.summary == SummaryMode::kLast) {
      for (std::size_t j = 0; j < hidden; ++j) {
        dh_f[len - 1][j] = dsummary[b][j];
        dh_b[0][j] = dsummary[b][hidden + j];
      }
    } else {
      for (std::size_t t = 0; t < len; ++t) {
        for (std::size_t j = 0; j < hidden; ++j) {
          dh_f[t][j] = dsummary[b][j] / static_cast<T>(len);
          dh_b[t][j] = dsummary[b][hidden + j] / static_cast<T>(len);
        }
      }
    }
    std::vector<std::vector<T>> dx(steps, std::vector<T>(cfg.embed_dim, T{}));

    std::vector<T> dh(hidden, T{}), dc(hidden, T{});
    for (std::size_t t = steps; t-- > 0;) {
      for (std::size_t j = 0; j < hidden; ++j) dh[j] += dh_f[t][j];
      const auto g = lstm_cell_backward<T>(tr.fwd[t], dh, dc, p.lstm.forward, grads.lstm.forward);
      for (std::size_t k = 0; k < cfg.embed_dim; ++k) dx[t][k] += g.dx[k];
      dh = g.dh_prev;
      dc = g.dc_prev;
    }
    std::fill(dh.begin(), dh.end(), T{});
    std::fill(dc.begin(), dc.end(), T{});
    for (std::size_t t = 0; t < steps; ++t) {
      for (std::size_t j = 0; j < hidden; ++j) dh[j] += dh_b[t][j];
      const auto g = lstm_cell_backward<T>(tr.bwd[t], dh, dc, p.lstm.backward, grads.lstm.backward);
      for (std::size_t k = 0; k < cfg.embed_dim; ++k) dx[t][k] += g.dx[k];
      dh = g.dh_prev;
      dc = g.dc_prev;
    }
    for (std::size_t t = 0; t < steps; ++t) {
      const TokenId id = batch.tokens[b * steps + t];
      if (id == kPadId) continue;
      for (std::size_t k = 0; k < cfg.embed_dim; ++k) grads.embedding(static_cast<std::size_t>(id), k) += dx[t][k];
    }
  }
  return loss;
}

}  // namespace edithumor::reference
