#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "edithumor/parallel.hpp"
#include "edithumor/tensor.hpp"

namespace edithumor {

// Gate blocks inside the 4H rows of W, V and b.
enum Gate : std::size_t { kInputGate = 0, kForgetGate = 1, kCandidate = 2, kOutputGate = 3 };

template <typename T>
struct LstmDirectionParams {
  Matrix<T> W;           // 4H x D
  Matrix<T> V;           // 4H x H, recurrent
  std::vector<T> b;      // 4H

  LstmDirectionParams() = default;
  LstmDirectionParams(std::size_t input_dim, std::size_t hidden)
      : W(4 * hidden, input_dim), V(4 * hidden, hidden), b(4 * hidden, T{}) {}

  std::size_t input_dim() const { return W.cols(); }
  std::size_t hidden() const { return V.cols(); }

  void validate() const {
    const auto h = hidden();
    require_shape(W, 4 * h, W.cols(), "lstm W");
    require_shape(V, 4 * h, h, "lstm V");
    require_size(b.size(), 4 * h, "lstm b");
  }

  friend bool operator==(const LstmDirectionParams&, const LstmDirectionParams&) = default;
};

template <typename T>
struct BiLstmParams {
  LstmDirectionParams<T> forward;
  LstmDirectionParams<T> backward;

  friend bool operator==(const BiLstmParams&, const BiLstmParams&) = default;
};

enum class SummaryMode { kLast, kMean };

// ---------------------------------------------------------------------------
// Single cell, one example. Used by the serial reference path and the cell
// unit tests.

template <typename T>
struct CellStep {
  std::vector<T> x, h_prev, c_prev;
  std::vector<T> i, f, g, o;  // post-activation gates
  std::vector<T> c, h;
};

template <typename T>
CellStep<T> lstm_cell_forward(std::span<const T> x, std::span<const T> h_prev,
                              std::span<const T> c_prev, const LstmDirectionParams<T>& p) {
  const std::size_t hidden = p.hidden();
  const std::size_t input = p.input_dim();
  require_size(x.size(), input, "lstm cell x");
  require_size(h_prev.size(), hidden, "lstm cell h_prev");
  require_size(c_prev.size(), hidden, "lstm cell c_prev");

  CellStep<T> s;
  s.x.assign(x.begin(), x.end());
  s.h_prev.assign(h_prev.begin(), h_prev.end());
  s.c_prev.assign(c_prev.begin(), c_prev.end());
  s.i.resize(hidden);
  s.f.resize(hidden);
  s.g.resize(hidden);
  s.o.resize(hidden);
  s.c.resize(hidden);
  s.h.resize(hidden);

  auto preact = [&](std::size_t row) {
    T acc = p.b[row];
    for (std::size_t d = 0; d < input; ++d) acc += p.W(row, d) * x[d];
    for (std::size_t k = 0; k < hidden; ++k) acc += p.V(row, k) * h_prev[k];
    return acc;
  };
  for (std::size_t j = 0; j < hidden; ++j) {
    s.i[j] = sigmoid(preact(kInputGate * hidden + j));
    s.f[j] = sigmoid(preact(kForgetGate * hidden + j));
    s.g[j] = std::tanh(preact(kCandidate * hidden + j));
    s.o[j] = sigmoid(preact(kOutputGate * hidden + j));
    s.c[j] = s.f[j] * c_prev[j] + s.i[j] * s.g[j];
    s.h[j] = s.o[j] * std::tanh(s.c[j]);
  }
  return s;
}

template <typename T>
struct CellGrads {
  std::vector<T> dx, dh_prev, dc_prev;
};

/// Backpropagates dL/dh and dL/dc of one step. Parameter gradients are added
/// into `grads`.
template <typename T>
CellGrads<T> lstm_cell_backward(const CellStep<T>& s, std::span<const T> dh, std::span<const T> dc_in,
                                const LstmDirectionParams<T>& p, LstmDirectionParams<T>& grads) {
  const std::size_t hidden = p.hidden();
  const std::size_t input = p.input_dim();
  std::vector<T> dpre(4 * hidden);
  CellGrads<T> out{std::vector<T>(input, T{}), std::vector<T>(hidden, T{}),
                   std::vector<T>(hidden, T{})};
  for (std::size_t j = 0; j < hidden; ++j) {
    const T tc = std::tanh(s.c[j]);
    const T dc = dc_in[j] + dh[j] * s.o[j] * (T(1) - tc * tc);
    dpre[kInputGate * hidden + j] = dc * s.g[j] * s.i[j] * (T(1) - s.i[j]);
    dpre[kForgetGate * hidden + j] = dc * s.c_prev[j] * s.f[j] * (T(1) - s.f[j]);
    dpre[kCandidate * hidden + j] = dc * s.i[j] * (T(1) - s.g[j] * s.g[j]);
    dpre[kOutputGate * hidden + j] = dh[j] * tc * s.o[j] * (T(1) - s.o[j]);
    out.dc_prev[j] = dc * s.f[j];
  }
  for (std::size_t row = 0; row < 4 * hidden; ++row) {
    const T d = dpre[row];
    grads.b[row] += d;
    for (std::size_t k = 0; k < input; ++k) {
      grads.W(row, k) += d * s.x[k];
      out.dx[k] += d * p.W(row, k);
    }
    for (std::size_t k = 0; k < hidden; ++k) {
      grads.V(row, k) += d * s.h_prev[k];
      out.dh_prev[k] += d * p.V(row, k);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Batched direction scan. Inputs are (B*L) x D, row b*L + t.

template <typename T>
struct DirectionCache {
  bool reverse = false;
  std::size_t batch = 0, steps = 0;
  Matrix<T> acts;  // (B*L) x 4H post-activation [i f g o]
  Matrix<T> c;     // (B*L) x H
  Matrix<T> h;     // (B*L) x H
};

namespace detail {

// Row holding the state that precedes step t in scan order, or -1.
inline std::int64_t prev_row(std::size_t b, std::size_t t, std::size_t steps, bool reverse) {
  if (!reverse) return t == 0 ? -1 : static_cast<std::int64_t>(b * steps + t - 1);
  return t + 1 == steps ? -1 : static_cast<std::int64_t>(b * steps + t + 1);
}

}  // namespace detail

template <typename T>
void lstm_direction_forward(const LstmDirectionParams<T>& p, const Matrix<T>& x, std::size_t batch,
                            std::size_t steps, bool reverse, DirectionCache<T>& cache) {
  p.validate();
  const std::size_t hidden = p.hidden();
  const std::size_t g4 = 4 * hidden;
  require_shape(x, batch * steps, p.input_dim(), "lstm input");

  cache.reverse = reverse;
  cache.batch = batch;
  cache.steps = steps;
  cache.acts.resize(batch * steps, g4);
  cache.c.resize(batch * steps, hidden);
  cache.h.resize(batch * steps, hidden);

  // Input projection for every (b, t) at once.
  const Matrix<T> wt = kernels::transpose(p.W);
  kernels::gemm_nn(batch * steps, g4, p.input_dim(), x.data(), wt.data(), cache.acts.data(), false);
  const Matrix<T> vt = kernels::transpose(p.V);

  const auto nb = static_cast<std::int64_t>(batch);
  for (std::size_t s = 0; s < steps; ++s) {
    const std::size_t t = reverse ? steps - 1 - s : s;
#pragma omp parallel for schedule(static) if (static_cast<std::int64_t>(batch * g4 * hidden) > kernels::kParallelThreshold)
    for (std::int64_t bi = 0; bi < nb; ++bi) {
      const auto b = static_cast<std::size_t>(bi);
      const std::size_t row = b * steps + t;
      const std::int64_t prev = detail::prev_row(b, t, steps, reverse);
      T* gates = cache.acts.row(row);
      for (std::size_t j = 0; j < g4; ++j) gates[j] += p.b[j];
      if (prev >= 0) {
        const T* hp = cache.h.row(static_cast<std::size_t>(prev));
        for (std::size_t k = 0; k < hidden; ++k) {
          const T hv = hp[k];
          if (hv == T{}) continue;
          const T* vrow = vt.row(k);
          for (std::size_t j = 0; j < g4; ++j) gates[j] += hv * vrow[j];
        }
      }
      T* cr = cache.c.row(row);
      T* hr = cache.h.row(row);
      const T* cp = prev >= 0 ? cache.c.row(static_cast<std::size_t>(prev)) : nullptr;
      for (std::size_t j = 0; j < hidden; ++j) {
        const T i = sigmoid(gates[kInputGate * hidden + j]);
        const T f = sigmoid(gates[kForgetGate * hidden + j]);
        const T g = std::tanh(gates[kCandidate * hidden + j]);
        const T o = sigmoid(gates[kOutputGate * hidden + j]);
        gates[kInputGate * hidden + j] = i;
        gates[kForgetGate * hidden + j] = f;
        gates[kCandidate * hidden + j] = g;
        gates[kOutputGate * hidden + j] = o;
        cr[j] = f * (cp ? cp[j] : T{}) + i * g;
        hr[j] = o * std::tanh(cr[j]);
      }
    }
  }
}

/// `dh_ext` ((B*L) x H) is the loss gradient arriving at every hidden state
/// from outside the recurrence. Parameter gradients are added into `grads`,
/// input gradients into `dx`.
template <typename T>
void lstm_direction_backward(const LstmDirectionParams<T>& p, const Matrix<T>& x,
                             const DirectionCache<T>& cache, const Matrix<T>& dh_ext,
                             LstmDirectionParams<T>& grads, Matrix<T>& dx) {
  const std::size_t hidden = p.hidden();
  const std::size_t g4 = 4 * hidden;
  const std::size_t batch = cache.batch;
  const std::size_t steps = cache.steps;
  const bool reverse = cache.reverse;
  require_shape(dh_ext, batch * steps, hidden, "lstm dh");
  require_shape(dx, batch * steps, p.input_dim(), "lstm dx");

  Matrix<T> dpre(batch * steps, g4);
  Matrix<T> dh_rec(batch, hidden);
  Matrix<T> dc_rec(batch, hidden);

  const auto nb = static_cast<std::int64_t>(batch);
  for (std::size_t s = steps; s-- > 0;) {
    const std::size_t t = reverse ? steps - 1 - s : s;
#pragma omp parallel for schedule(static) if (static_cast<std::int64_t>(batch * g4 * hidden) > kernels::kParallelThreshold)
    for (std::int64_t bi = 0; bi < nb; ++bi) {
      const auto b = static_cast<std::size_t>(bi);
      const std::size_t row = b * steps + t;
      const std::int64_t prev = detail::prev_row(b, t, steps, reverse);
      const T* a = cache.acts.row(row);
      const T* cr = cache.c.row(row);
      const T* cp = prev >= 0 ? cache.c.row(static_cast<std::size_t>(prev)) : nullptr;
      const T* dhe = dh_ext.row(row);
      T* dhr = dh_rec.row(b);
      T* dcr = dc_rec.row(b);
      T* dp = dpre.row(row);
      for (std::size_t j = 0; j < hidden; ++j) {
        const T i = a[kInputGate * hidden + j];
        const T f = a[kForgetGate * hidden + j];
        const T g = a[kCandidate * hidden + j];
        const T o = a[kOutputGate * hidden + j];
        const T tc = std::tanh(cr[j]);
        const T dh = dhe[j] + dhr[j];
        const T dc = dcr[j] + dh * o * (T(1) - tc * tc);
        dp[kInputGate * hidden + j] = dc * g * i * (T(1) - i);
        dp[kForgetGate * hidden + j] = dc * (cp ? cp[j] : T{}) * f * (T(1) - f);
        dp[kCandidate * hidden + j] = dc * i * (T(1) - g * g);
        dp[kOutputGate * hidden + j] = dh * tc * o * (T(1) - o);
        dcr[j] = dc * f;
      }
      std::fill(dhr, dhr + hidden, T{});
      if (prev >= 0) {
        for (std::size_t r = 0; r < g4; ++r) {
          const T d = dp[r];
          if (d == T{}) continue;
          const T* vrow = p.V.row(r);
          for (std::size_t k = 0; k < hidden; ++k) dhr[k] += d * vrow[k];
        }
      }
    }
  }

  // State preceding each row in scan order; zero at the scan start.
  Matrix<T> h_prev(batch * steps, hidden);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t t = 0; t < steps; ++t) {
      const std::int64_t prev = detail::prev_row(b, t, steps, reverse);
      if (prev < 0) continue;
      const T* src = cache.h.row(static_cast<std::size_t>(prev));
      std::copy(src, src + hidden, h_prev.row(b * steps + t));
    }
  }

  const std::size_t n = batch * steps;
  kernels::gemm_tn_acc(g4, p.input_dim(), n, dpre.data(), x.data(), grads.W.data());
  kernels::gemm_tn_acc(g4, hidden, n, dpre.data(), h_prev.data(), grads.V.data());
  kernels::column_sums_acc(n, g4, dpre.data(), grads.b.data());
  kernels::gemm_nn(n, p.input_dim(), g4, dpre.data(), p.W.data(), dx.data(), true);
}

// ---------------------------------------------------------------------------
// Bidirectional layer with sequence summary.

template <typename T>
struct BiLstmCache {
  DirectionCache<T> forward;
  DirectionCache<T> backward;
  std::vector<int> lengths;
  SummaryMode mode = SummaryMode::kLast;
};

/// x is (B*L) x D. Returns the B x 2H summary: with kLast the forward state
/// at step length-1 concatenated with the backward state at step 0 (which has
/// scanned the whole padded window); with kMean both directions averaged over
/// the valid steps. Zero-length rows summarise to zeros.
template <typename T>
Matrix<T> bilstm_forward(const BiLstmParams<T>& p, const Matrix<T>& x, std::size_t batch,
                         std::size_t steps, std::span<const int> lengths, SummaryMode mode,
                         BiLstmCache<T>& cache) {
  require_size(lengths.size(), batch, "bilstm lengths");
  if (p.forward.hidden() != p.backward.hidden() || p.forward.input_dim() != p.backward.input_dim()) {
    throw ShapeMismatch("bilstm: forward and backward directions disagree on D or H");
  }
  for (const int len : lengths) {
    if (len < 0 || static_cast<std::size_t>(len) > steps) {
      throw ShapeMismatch("bilstm: sequence length outside [0, L]");
    }
  }
  cache.lengths.assign(lengths.begin(), lengths.end());
  cache.mode = mode;
  lstm_direction_forward(p.forward, x, batch, steps, false, cache.forward);
  lstm_direction_forward(p.backward, x, batch, steps, true, cache.backward);

  const std::size_t hidden = p.forward.hidden();
  Matrix<T> summary(batch, 2 * hidden);
  for (std::size_t b = 0; b < batch; ++b) {
    const auto len = static_cast<std::size_t>(lengths[b]);
    if (len == 0) continue;
    T* out = summary.row(b);
    if (mode == SummaryMode::kLast) {
      const T* hf = cache.forward.h.row(b * steps + len - 1);
      const T* hb = cache.backward.h.row(b * steps);
      std::copy(hf, hf + hidden, out);
      std::copy(hb, hb + hidden, out + hidden);
    } else {
      const T scale = T(1) / static_cast<T>(len);
      for (std::size_t t = 0; t < len; ++t) {
        const T* hf = cache.forward.h.row(b * steps + t);
        const T* hb = cache.backward.h.row(b * steps + t);
        for (std::size_t j = 0; j < hidden; ++j) {
          out[j] += hf[j];
          out[hidden + j] += hb[j];
        }
      }
      for (std::size_t j = 0; j < 2 * hidden; ++j) out[j] *= scale;
    }
  }
  return summary;
}

/// Returns dL/dx ((B*L) x D); parameter gradients are added into `grads`.
template <typename T>
Matrix<T> bilstm_backward(const BiLstmParams<T>& p, const Matrix<T>& x, const BiLstmCache<T>& cache,
                          const Matrix<T>& dsummary, BiLstmParams<T>& grads) {
  const std::size_t batch = cache.forward.batch;
  const std::size_t steps = cache.forward.steps;
  const std::size_t hidden = p.forward.hidden();
  require_shape(dsummary, batch, 2 * hidden, "bilstm dsummary");

  Matrix<T> dh_f(batch * steps, hidden);
  Matrix<T> dh_b(batch * steps, hidden);
  for (std::size_t b = 0; b < batch; ++b) {
    const auto len = static_cast<std::size_t>(cache.lengths[b]);
    if (len == 0) continue;
    const T* ds = dsummary.row(b);
    if (cache.mode == SummaryMode::kLast) {
      std::copy(ds, ds + hidden, dh_f.row(b * steps + len - 1));
      std::copy(ds + hidden, ds + 2 * hidden, dh_b.row(b * steps));
    } else {
      const T scale = T(1) / static_cast<T>(len);
      for (std::size_t t = 0; t < len; ++t) {
        T* df = dh_f.row(b * steps + t);
        T* db = dh_b.row(b * steps + t);
        for (std::size_t j = 0; j < hidden; ++j) {
          df[j] = ds[j] * scale;
          db[j] = ds[hidden + j] * scale;
        }
      }
    }
  }

  Matrix<T> dx(batch * steps, p.forward.input_dim());
  lstm_direction_backward(p.forward, x, cache.forward, dh_f, grads.forward, dx);
  lstm_direction_backward(p.backward, x, cache.backward, dh_b, grads.backward, dx);
  return dx;
}

}  // namespace edithumor
