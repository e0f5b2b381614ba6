#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "edithumor/model.hpp"

namespace edithumor {

template <typename T>
struct LossResult {
  T loss{};
  std::vector<T> grad;  // dL/dpred
};

/// Mean squared error (1/n) sum (y - yhat)^2 and its gradient 2(yhat - y)/n.
template <typename T>
LossResult<T> mse_loss(std::span<const T> pred, std::span<const T> target) {
  if (pred.empty()) throw EmptyBatch("mse_loss on an empty batch");
  require_size(target.size(), pred.size(), "mse target");
  const T n = static_cast<T>(pred.size());
  LossResult<T> r;
  r.grad.resize(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const T d = pred[i] - target[i];
    r.loss += d * d;
    r.grad[i] = T(2) * d / n;
  }
  r.loss /= n;
  return r;
}

struct RmspropConfig {
  double learning_rate = 0.001;
  double rho = 0.9;
  double eps = 1e-8;
};

/// One accumulator per trainable tensor, in trainable_views order.
template <typename T>
struct RmspropState {
  std::vector<std::vector<T>> accum;

  RmspropState() = default;
  explicit RmspropState(ModelParams<T>& params) {
    for (const auto& v : trainable_views<T>(params)) accum.emplace_back(v.values.size(), T{});
  }

  friend bool operator==(const RmspropState&, const RmspropState&) = default;
};

/// s <- rho*s + (1-rho)*g^2 ; p <- p - lr*g/(sqrt(s)+eps) over a flat range.
template <typename T>
void rmsprop_update(std::span<T> p, std::span<const T> g, std::span<T> s, const RmspropConfig& cfg) {
  require_size(g.size(), p.size(), "rmsprop grad");
  require_size(s.size(), p.size(), "rmsprop accumulator");
  const T lr = static_cast<T>(cfg.learning_rate);
  const T rho = static_cast<T>(cfg.rho);
  const T eps = static_cast<T>(cfg.eps);
  for (std::size_t i = 0; i < p.size(); ++i) {
    s[i] = rho * s[i] + (T(1) - rho) * g[i] * g[i];
    p[i] -= lr * g[i] / (std::sqrt(s[i]) + eps);
  }
}

/// Applies one RMSprop step to every trainable tensor. The embedding is
/// updated only on rows listed in grads.touched_rows, so rows absent from the
/// batch (and the PAD row) keep both their value and their accumulator.
template <typename T>
void rmsprop_step(ModelParams<T>& params, ModelGrads<T>& grads, RmspropState<T>& state,
                  const RmspropConfig& cfg) {
  auto pv = trainable_views<T>(params);
  auto gv = trainable_views<T>(grads);
  require_size(state.accum.size(), pv.size(), "rmsprop state");
  require_size(gv.size(), pv.size(), "rmsprop grads");
  for (std::size_t k = 0; k < pv.size(); ++k) {
    require_size(gv[k].values.size(), pv[k].values.size(), pv[k].name.c_str());
    auto s = std::span<T>(state.accum[k]);
    if (k == 0) {
      const std::size_t dim = params.embedding.cols();
      for (const TokenId id : grads.touched_rows) {
        if (id == kPadId) continue;
        const std::size_t off = static_cast<std::size_t>(id) * dim;
        rmsprop_update<T>(pv[k].values.subspan(off, dim), gv[k].values.subspan(off, dim),
                          s.subspan(off, dim), cfg);
      }
    } else {
      rmsprop_update<T>(pv[k].values, gv[k].values, s, cfg);
    }
  }
}

/// Global L2 norm of the gradient (embedding restricted to touched rows).
template <typename T>
double grad_norm(ModelGrads<T>& grads) {
  double sq = 0.0;
  auto gv = trainable_views<T>(grads);
  const std::size_t dim = grads.embedding.cols();
  for (const TokenId id : grads.touched_rows) {
    for (const T v : gv[0].values.subspan(static_cast<std::size_t>(id) * dim, dim)) sq += double(v) * v;
  }
  for (std::size_t k = 1; k < gv.size(); ++k) {
    for (const T v : gv[k].values) sq += double(v) * v;
  }
  return std::sqrt(sq);
}

template <typename T>
void scale_grads(ModelGrads<T>& grads, T factor) {
  for (auto& v : trainable_views<T>(grads)) {
    for (auto& x : v.values) x *= factor;
  }
}

}  // namespace edithumor
