#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "edithumor/model.hpp"

namespace edithumor {

inline constexpr std::size_t kMaxGradcheckDim = 8;

struct GradcheckConfig {
  std::size_t batch = 4;
  std::size_t seq_len = 5;
  std::size_t embed_dim = 6;
  std::size_t hidden = 4;
  std::size_t vocab = 8;
  std::size_t samples = 20;  // coordinates per tensor (all when fewer)
  double step = 1e-5;
  double tolerance = 1e-4;
  std::uint64_t seed = 7;
  SummaryMode summary = SummaryMode::kLast;
  bool output_relu = false;
};

struct TensorCheck {
  std::string name;
  std::size_t coordinates = 0;
  double max_rel_error = 0.0;
  bool pass = true;
};

struct GradcheckReport {
  std::vector<TensorCheck> tensors;
  bool pass = true;
};

// Hook applied to the analytic gradient before comparison (fault injection).
using GradTamper = std::function<void(ModelGrads<double>&)>;

/// |a - n| / max(|a|, |n|, kGradFloor): relative error, absolute below the floor.
inline constexpr double kGradFloor = 1e-6;
double relative_error(double analytic, double numeric);

/// Compares model_backward against central differences of the train-mode
/// MSE for every trainable tensor. Embedding coordinates are drawn from the
/// non-PAD rows present in the batch; other rows have identically zero
/// gradient.
GradcheckReport gradcheck(const ModelParams<double>& params, const ModelConfig& model,
                          const Batch& batch, std::span<const double> targets,
                          const GradcheckConfig& cfg, const GradTamper& tamper = {});

/// Random toy problem (all dims from `cfg`) checked as above.
GradcheckReport gradcheck(const GradcheckConfig& cfg, const GradTamper& tamper = {});

/// The random toy problem itself, exposed for tests.
struct ToyProblem {
  ModelConfig model;
  ModelParams<double> params;
  Batch batch;
  std::vector<double> targets;
};
ToyProblem make_toy_problem(const GradcheckConfig& cfg);

}  // namespace edithumor
