#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "edithumor/parallel.hpp"
#include "edithumor/tensor.hpp"

namespace edithumor {

enum class Mode { kTrain, kInfer };

template <typename T>
struct BatchNormParams {
  std::vector<T> gamma;
  std::vector<T> beta;
  std::vector<T> running_mean;
  std::vector<T> running_var;
  T epsilon = T(1e-3);
  T momentum = T(0.99);

  BatchNormParams() = default;
  explicit BatchNormParams(std::size_t features, T eps = T(1e-3), T mom = T(0.99))
      : gamma(features, T(1)),
        beta(features, T{}),
        running_mean(features, T{}),
        running_var(features, T(1)),
        epsilon(eps),
        momentum(mom) {}

  std::size_t features() const { return gamma.size(); }

  friend bool operator==(const BatchNormParams&, const BatchNormParams&) = default;
};

template <typename T>
struct BatchNormCache {
  Mode mode = Mode::kTrain;
  Matrix<T> xhat;             // B x F standardized input
  std::vector<T> inv_std;     // F
  std::vector<T> batch_mean;  // F, train mode only
  std::vector<T> batch_var;   // F, population variance
};

/// Per-feature standardize, scale by gamma, shift by beta. Train mode uses
/// the batch statistics and needs B >= 2; infer mode uses the running ones.
/// Running statistics are not touched here, see commit_running_stats.
template <typename T>
Matrix<T> batchnorm_forward(const Matrix<T>& z, const BatchNormParams<T>& p, Mode mode,
                            BatchNormCache<T>& cache) {
  const std::size_t batch = z.rows();
  const std::size_t feats = p.features();
  require_shape(z, batch, feats, "batchnorm input");
  if (mode == Mode::kTrain && batch < 2) {
    throw DegenerateBatch("batchnorm in train mode needs at least 2 rows, got " +
                          std::to_string(batch));
  }
  cache.mode = mode;
  cache.xhat.resize(batch, feats);
  cache.inv_std.assign(feats, T{});
  cache.batch_mean.assign(feats, T{});
  cache.batch_var.assign(feats, T{});
  Matrix<T> out(batch, feats);

  const auto nf = static_cast<std::int64_t>(feats);
#pragma omp parallel for schedule(static) if (static_cast<std::int64_t>(batch * feats) > kernels::kParallelThreshold)
  for (std::int64_t fi = 0; fi < nf; ++fi) {
    const auto f = static_cast<std::size_t>(fi);
    T mean, var;
    if (mode == Mode::kTrain) {
      T sum{};
      for (std::size_t b = 0; b < batch; ++b) sum += z(b, f);
      mean = sum / static_cast<T>(batch);
      T sq{};
      for (std::size_t b = 0; b < batch; ++b) {
        const T d = z(b, f) - mean;
        sq += d * d;
      }
      var = sq / static_cast<T>(batch);
      cache.batch_mean[f] = mean;
      cache.batch_var[f] = var;
    } else {
      mean = p.running_mean[f];
      var = p.running_var[f];
    }
    const T inv = T(1) / std::sqrt(var + p.epsilon);
    cache.inv_std[f] = inv;
    for (std::size_t b = 0; b < batch; ++b) {
      const T xh = (z(b, f) - mean) * inv;
      cache.xhat(b, f) = xh;
      out(b, f) = p.gamma[f] * xh + p.beta[f];
    }
  }
  return out;
}

/// running <- momentum * running + (1 - momentum) * batch.
template <typename T>
void commit_running_stats(BatchNormParams<T>& p, const BatchNormCache<T>& cache) {
  if (cache.mode != Mode::kTrain) return;
  for (std::size_t f = 0; f < p.features(); ++f) {
    p.running_mean[f] = p.momentum * p.running_mean[f] + (T(1) - p.momentum) * cache.batch_mean[f];
    p.running_var[f] = p.momentum * p.running_var[f] + (T(1) - p.momentum) * cache.batch_var[f];
  }
}

template <typename T>
struct BatchNormGrads {
  std::vector<T> gamma;
  std::vector<T> beta;
};

/// Returns dL/dz; dgamma and dbeta are added into `grads`.
template <typename T>
Matrix<T> batchnorm_backward(const Matrix<T>& dy, const BatchNormParams<T>& p,
                             const BatchNormCache<T>& cache, BatchNormGrads<T>& grads) {
  const std::size_t batch = cache.xhat.rows();
  const std::size_t feats = p.features();
  require_shape(dy, batch, feats, "batchnorm dy");
  Matrix<T> dz(batch, feats);
  const T n = static_cast<T>(batch);

  const auto nf = static_cast<std::int64_t>(feats);
#pragma omp parallel for schedule(static) if (static_cast<std::int64_t>(batch * feats) > kernels::kParallelThreshold)
  for (std::int64_t fi = 0; fi < nf; ++fi) {
    const auto f = static_cast<std::size_t>(fi);
    T sum_dy{}, sum_dy_xhat{};
    for (std::size_t b = 0; b < batch; ++b) {
      sum_dy += dy(b, f);
      sum_dy_xhat += dy(b, f) * cache.xhat(b, f);
    }
    grads.gamma[f] += sum_dy_xhat;
    grads.beta[f] += sum_dy;
    const T g = p.gamma[f];
    const T inv = cache.inv_std[f];
    if (cache.mode == Mode::kTrain) {
      // dxhat = g*dy; dz = inv/n * (n*dxhat - sum(dxhat) - xhat*sum(dxhat*xhat))
      for (std::size_t b = 0; b < batch; ++b) {
        dz(b, f) = g * inv / n * (n * dy(b, f) - sum_dy - cache.xhat(b, f) * sum_dy_xhat);
      }
    } else {
      for (std::size_t b = 0; b < batch; ++b) dz(b, f) = g * inv * dy(b, f);
    }
  }
  return dz;
}

}  // namespace edithumor
