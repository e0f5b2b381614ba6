#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "edithumor/parallel.hpp"
#include "edithumor/tensor.hpp"

namespace edithumor {

// Single-output linear regression head.
template <typename T>
struct HeadParams {
  std::vector<T> weight;
  T bias{};

  friend bool operator==(const HeadParams&, const HeadParams&) = default;
};

/// y = s . weight + bias; with `relu` the output is max(0, y). `pre` receives
/// the pre-activation values when non-null.
template <typename T>
std::vector<T> head_forward(const Matrix<T>& s, const HeadParams<T>& p, bool relu = false,
                            std::vector<T>* pre = nullptr) {
  const std::size_t batch = s.rows();
  require_shape(s, batch, p.weight.size(), "head input");
  std::vector<T> y(batch);
  if (pre) pre->assign(batch, T{});
  const auto nb = static_cast<std::int64_t>(batch);
#pragma omp parallel for schedule(static) if (static_cast<std::int64_t>(s.size()) > kernels::kParallelThreshold)
  for (std::int64_t bi = 0; bi < nb; ++bi) {
    const auto b = static_cast<std::size_t>(bi);
    T acc{};
    const T* row = s.row(b);
    for (std::size_t f = 0; f < p.weight.size(); ++f) acc += row[f] * p.weight[f];
    acc += p.bias;
    if (pre) (*pre)[b] = acc;
    y[b] = relu ? std::max(acc, T{}) : acc;
  }
  return y;
}

/// Returns dL/ds; weight and bias gradients are added into `grads`.
/// `pre` is only consulted when `relu` is set.
template <typename T>
Matrix<T> head_backward(const Matrix<T>& s, const HeadParams<T>& p, std::span<const T> dy,
                        HeadParams<T>& grads, bool relu = false,
                        std::span<const T> pre = {}) {
  const std::size_t batch = s.rows();
  const std::size_t feats = p.weight.size();
  require_size(dy.size(), batch, "head dy");
  std::vector<T> d(dy.begin(), dy.end());
  if (relu) {
    require_size(pre.size(), batch, "head pre-activation");
    for (std::size_t b = 0; b < batch; ++b) {
      if (pre[b] <= T{}) d[b] = T{};
    }
  }
  Matrix<T> ds(batch, feats);
  for (std::size_t b = 0; b < batch; ++b) {
    grads.bias += d[b];
    for (std::size_t f = 0; f < feats; ++f) ds(b, f) = d[b] * p.weight[f];
  }
  for (std::size_t f = 0; f < feats; ++f) {
    T acc{};
    for (std::size_t b = 0; b < batch; ++b) acc += d[b] * s(b, f);
    grads.weight[f] += acc;
  }
  return ds;
}

template <typename T>
void clamp_predictions(std::span<T> values, T lo, T hi) {
  for (auto& v : values) v = std::clamp(v, lo, hi);
}

}  // namespace edithumor
