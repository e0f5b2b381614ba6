#include "edithumor/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "edithumor/error.hpp"
#include "edithumor/optim.hpp"

namespace edithumor {

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), kGradFloor});
  return std::abs(analytic - numeric) / denom;
}

ToyProblem make_toy_problem(const GradcheckConfig& cfg) {
  ToyProblem toy;
  toy.model.vocab_size = std::max<std::size_t>(cfg.vocab, 3);
  toy.model.seq_len = cfg.seq_len;
  toy.model.embed_dim = cfg.embed_dim;
  toy.model.hidden = cfg.hidden;
  toy.model.summary = cfg.summary;
  toy.model.output_relu = cfg.output_relu;

  Rng rng(cfg.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  Matrix<double> emb(toy.model.vocab_size, cfg.embed_dim);
  for (std::size_t r = 1; r < emb.rows(); ++r) {
    for (std::size_t c = 0; c < emb.cols(); ++c) emb(r, c) = unit(rng);
  }
  toy.params = init_params<double>(toy.model, std::move(emb), rng);
  // Move away from the symmetric init so every term carries signal.
  for (auto* dir : {&toy.params.lstm.forward, &toy.params.lstm.backward}) {
    for (auto& b : dir->b) b += 0.3 * unit(rng);
  }
  for (auto& g : toy.params.bn.gamma) g = 1.0 + 0.3 * unit(rng);
  for (auto& b : toy.params.bn.beta) b = 0.3 * unit(rng);
  toy.params.head.bias = 0.5;

  std::uniform_int_distribution<int> tok(1, static_cast<int>(toy.model.vocab_size) - 1);
  std::uniform_int_distribution<int> len(1, static_cast<int>(cfg.seq_len));
  toy.batch.size = cfg.batch;
  toy.batch.seq_len = cfg.seq_len;
  for (std::size_t b = 0; b < cfg.batch; ++b) {
    const int n = len(rng);
    toy.batch.lengths.push_back(n);
    for (std::size_t t = 0; t < cfg.seq_len; ++t) {
      toy.batch.tokens.push_back(static_cast<int>(t) < n ? tok(rng) : kPadId);
    }
  }
  std::uniform_real_distribution<double> grade(0.0, 3.0);
  for (std::size_t b = 0; b < cfg.batch; ++b) toy.targets.push_back(grade(rng));
  return toy;
}

GradcheckReport gradcheck(const ModelParams<double>& params, const ModelConfig& model,
                          const Batch& batch, std::span<const double> targets,
                          const GradcheckConfig& cfg, const GradTamper& tamper) {
  ModelParams<double> work = params;
  ForwardCache<double> cache;
  const auto pred = model_forward(work, model, batch, Mode::kTrain, cache);
  const auto loss = mse_loss<double>(pred, targets);
  ModelGrads<double> grads(model);
  model_backward(work, model, batch, cache, std::span<const double>(loss.grad), grads);
  if (tamper) tamper(grads);

  auto loss_at = [&]() {
    ForwardCache<double> c;
    const auto y = model_forward(work, model, batch, Mode::kTrain, c);
    return mse_loss<double>(y, targets).loss;
  };

  Rng rng(cfg.seed ^ 0x9E3779B97F4A7C15ull);
  auto pviews = trainable_views<double>(work);
  auto gviews = trainable_views<double>(grads);

  GradcheckReport report;
  for (std::size_t k = 0; k < pviews.size(); ++k) {
    auto& pv = pviews[k];
    const auto& gv = gviews[k];

    std::vector<std::size_t> candidates;
    if (pv.name == "embedding") {
      for (const TokenId id : grads.touched_rows) {
        for (std::size_t d = 0; d < model.embed_dim; ++d) {
          candidates.push_back(static_cast<std::size_t>(id) * model.embed_dim + d);
        }
      }
    } else {
      for (std::size_t i = 0; i < pv.values.size(); ++i) candidates.push_back(i);
    }
    if (candidates.size() > cfg.samples) {
      std::shuffle(candidates.begin(), candidates.end(), rng);
      candidates.resize(cfg.samples);
    }

    TensorCheck check;
    check.name = pv.name;
    check.coordinates = candidates.size();
    for (const std::size_t i : candidates) {
      const double saved = pv.values[i];
      pv.values[i] = saved + cfg.step;
      const double up = loss_at();
      pv.values[i] = saved - cfg.step;
      const double down = loss_at();
      pv.values[i] = saved;
      const double numeric = (up - down) / (2.0 * cfg.step);
      check.max_rel_error = std::max(check.max_rel_error, relative_error(gv.values[i], numeric));
    }
    check.pass = check.max_rel_error < cfg.tolerance;
    report.pass = report.pass && check.pass;
    report.tensors.push_back(check);
  }
  return report;
}

GradcheckReport gradcheck(const GradcheckConfig& cfg, const GradTamper& tamper) {
  for (const std::size_t d : {cfg.batch, cfg.seq_len, cfg.embed_dim, cfg.hidden, cfg.vocab}) {
    if (d == 0 || d > kMaxGradcheckDim) {
      throw ConfigError("gradcheck dimensions must lie in [1, 8]");
    }
  }
  if (cfg.batch < 2) throw ConfigError("gradcheck batch must be >= 2 (batch norm)");
  const auto toy = make_toy_problem(cfg);
  return gradcheck(toy.params, toy.model, toy.batch, toy.targets, cfg, tamper);
}

}  // namespace edithumor
