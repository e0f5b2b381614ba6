#include "edithumor/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "edithumor/error.hpp"
#include "edithumor/eval.hpp"

namespace edithumor {

void TrainConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("invalid config: " + msg); };
  if (epochs < 0) fail("epochs must be >= 0");
  if (batch_size < 2) fail("batch_size must be >= 2 (batch norm)");
  if (!(learning_rate > 0.0)) fail("learning_rate must be > 0");
  if (!(rho > 0.0 && rho < 1.0)) fail("rho must be in (0, 1)");
  if (!(eps >= 0.0)) fail("eps must be >= 0");
  if (seq_len <= 0) fail("seq_len must be > 0");
  if (hidden <= 0) fail("hidden must be > 0");
  if (embed_dim <= 0) fail("embed_dim must be > 0");
  if (clip_norm < 0.0) fail("clip_norm must be >= 0");
  if (!(bn_epsilon > 0.0)) fail("bn_epsilon must be > 0");
  if (!(bn_momentum >= 0.0 && bn_momentum < 1.0)) fail("bn_momentum must be in [0, 1)");
}

ModelConfig TrainConfig::model(std::size_t vocab_size) const {
  ModelConfig m;
  m.vocab_size = vocab_size;
  m.seq_len = static_cast<std::size_t>(seq_len);
  m.embed_dim = static_cast<std::size_t>(embed_dim);
  m.hidden = static_cast<std::size_t>(hidden);
  m.summary = summary;
  m.output_relu = output_relu;
  m.bn_epsilon = bn_epsilon;
  m.bn_momentum = bn_momentum;
  return m;
}

TrainState make_initial_state(const TrainConfig& config, Matrix<float> embedding, Rng rng) {
  config.validate();
  TrainState s;
  s.config = config;
  s.model = config.model(embedding.rows());
  s.params = init_params<float>(s.model, std::move(embedding), rng);
  s.optimizer = RmspropState<float>(s.params);
  s.rng = rng;
  s.epoch = 0;
  return s;
}

TrainState make_initial_state(const TrainConfig& config, const Vocab& vocab,
                              const std::filesystem::path* pretrained, CoverageReport* coverage) {
  config.validate();
  Rng rng(config.seed);
  const auto dim = static_cast<std::size_t>(config.embed_dim);
  Matrix<float> embedding;
  if (pretrained) {
    auto table = load_word2vec_binary(*pretrained, vocab, dim, rng);
    if (coverage) *coverage = table.coverage;
    embedding = std::move(table.matrix);
  } else {
    embedding = random_embedding(vocab.size(), dim, rng);
  }
  return make_initial_state(config, std::move(embedding), rng);
}

Batch make_batch(std::span<const Example> examples, std::span<const std::size_t> indices,
                 std::size_t seq_len) {
  Batch batch;
  batch.size = indices.size();
  batch.seq_len = seq_len;
  batch.tokens.reserve(indices.size() * seq_len);
  for (const std::size_t i : indices) {
    const auto& ex = examples[i];
    require_size(ex.tokens.size(), seq_len, "example tokens");
    batch.tokens.insert(batch.tokens.end(), ex.tokens.begin(), ex.tokens.end());
    batch.lengths.push_back(ex.true_length);
  }
  return batch;
}

std::vector<float> targets_of(std::span<const Example> examples) {
  std::vector<float> t;
  t.reserve(examples.size());
  for (const auto& ex : examples) {
    if (!ex.target) throw DataError("example " + ex.id + " has no meanGrade target");
    t.push_back(static_cast<float>(*ex.target));
  }
  return t;
}

std::vector<float> predict(const ModelParams<float>& params, const ModelConfig& model,
                           std::span<const Example> examples, std::size_t batch_size, bool clamp) {
  std::vector<float> out;
  out.reserve(examples.size());
  std::vector<std::size_t> idx;
  ForwardCache<float> cache;
  for (std::size_t start = 0; start < examples.size(); start += batch_size) {
    const std::size_t end = std::min(examples.size(), start + batch_size);
    idx.resize(end - start);
    std::iota(idx.begin(), idx.end(), start);
    const Batch batch = make_batch(examples, idx, model.seq_len);
    auto y = model_forward(params, model, batch, Mode::kInfer, cache);
    if (clamp) {
      clamp_predictions<float>(y, static_cast<float>(kMinGrade), static_cast<float>(kMaxGrade));
    }
    out.insert(out.end(), y.begin(), y.end());
  }
  return out;
}

double evaluate_mse(const TrainState& state, std::span<const Example> examples) {
  const auto pred = predict(state.params, state.model, examples,
                            static_cast<std::size_t>(state.config.batch_size), false);
  const auto target = targets_of(examples);
  double sq = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = double(pred[i]) - double(target[i]);
    sq += d * d;
  }
  return sq / static_cast<double>(pred.size());
}

namespace {

double dev_rmse(const TrainState& s, std::span<const Example> dev) {
  const auto pred = predict(s.params, s.model, dev, static_cast<std::size_t>(s.config.batch_size),
                            s.config.clamp_eval);
  const auto target = targets_of(dev);
  const std::vector<double> p(pred.begin(), pred.end());
  const std::vector<double> t(target.begin(), target.end());
  return rmse(p, t);
}

}  // namespace

TrainResult train(TrainState state, std::span<const Example> train_set,
                  std::span<const Example> dev_set, const EpochCallback& on_epoch) {
  state.config.validate();
  if (train_set.empty()) throw EmptyInput("training set is empty");
  const std::vector<float> targets = targets_of(train_set);
  if (!dev_set.empty()) (void)targets_of(dev_set);

  const auto batch_size = static_cast<std::size_t>(state.config.batch_size);
  const RmspropConfig opt = state.config.optimizer();

  TrainResult result;
  std::optional<double> best_rmse;
  std::vector<std::size_t> order(train_set.size());
  ModelGrads<float> grads(state.model);
  ForwardCache<float> cache;
  std::vector<float> batch_targets;

  while (state.epoch < state.config.epochs) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (state.config.shuffle) std::shuffle(order.begin(), order.end(), state.rng);

    double loss_sum = 0.0;
    std::size_t seen = 0;
    std::size_t step = 0;
    for (std::size_t start = 0; start < order.size(); start += batch_size, ++step) {
      const std::size_t end = std::min(order.size(), start + batch_size);
      if (end - start < 2) break;
      const auto idx = std::span<const std::size_t>(order).subspan(start, end - start);
      const Batch batch = make_batch(train_set, idx, state.model.seq_len);
      batch_targets.clear();
      for (const std::size_t i : idx) batch_targets.push_back(targets[i]);

      const auto pred = model_forward(state.params, state.model, batch, Mode::kTrain, cache);
      const auto loss = mse_loss<float>(pred, batch_targets);
      if (!std::isfinite(loss.loss)) {
        std::ostringstream msg;
        msg << "non-finite training loss at epoch " << state.epoch + 1 << ", step " << step;
        throw NonFiniteLoss(msg.str());
      }
      grads.clear();
      model_backward(state.params, state.model, batch, cache, std::span<const float>(loss.grad),
                     grads);
      if (state.config.clip_norm > 0.0) {
        const double norm = grad_norm(grads);
        if (norm > state.config.clip_norm) {
          scale_grads(grads, static_cast<float>(state.config.clip_norm / norm));
        }
      }
      rmsprop_step(state.params, grads, state.optimizer, opt);
      commit_running_stats(state.params.bn, cache.bn);

      loss_sum += double(loss.loss) * double(idx.size());
      seen += idx.size();
    }
    ++state.epoch;

    HistoryRow row;
    row.epoch = state.epoch;
    row.train_mse = seen ? loss_sum / static_cast<double>(seen) : 0.0;
    if (!dev_set.empty()) row.dev_rmse = dev_rmse(state, dev_set);
    result.history.push_back(row);

    if (row.dev_rmse && (!best_rmse || *row.dev_rmse < *best_rmse)) {
      best_rmse = row.dev_rmse;
      result.best = state;
    }
    if (on_epoch) on_epoch(row);
  }

  if (!best_rmse) result.best = state;
  result.last = std::move(state);
  return result;
}

void write_history_csv(const std::filesystem::path& path, std::span<const HistoryRow> rows,
                       std::uint64_t seed) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "# seed=" << seed << '\n';
  out << "epoch,train_mse,dev_rmse\n";
  for (const auto& r : rows) {
    out << r.epoch << ',' << format_real(r.train_mse) << ','
        << (r.dev_rmse ? format_real(*r.dev_rmse) : std::string{}) << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace edithumor
