#include "edithumor/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "edithumor/error.hpp"

namespace edithumor {

std::string to_string(RankBasis basis) {
  return basis == RankBasis::kTruth ? "truth" : "prediction";
}

RankBasis parse_rank_basis(const std::string& text) {
  if (text == "truth") return RankBasis::kTruth;
  if (text == "prediction") return RankBasis::kPrediction;
  throw ConfigError("rank basis must be 'truth' or 'prediction', got '" + text + "'");
}

double rmse(std::span<const double> pred, std::span<const double> truth) {
  if (pred.empty()) throw EmptyInput("rmse of an empty set");
  if (pred.size() != truth.size()) throw EmptyInput("rmse: prediction/truth length mismatch");
  double sq = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - truth[i];
    sq += d * d;
  }
  return std::sqrt(sq / static_cast<double>(pred.size()));
}

double rmse_at_k(std::span<const double> pred, std::span<const double> truth, int k_percent,
                 RankBasis basis) {
  if (pred.empty()) throw EmptyInput("rmse@k of an empty set");
  if (pred.size() != truth.size()) throw EmptyInput("rmse@k: prediction/truth length mismatch");
  if (k_percent <= 0 || k_percent > 100) throw ConfigError("rmse@k: k must be in (0, 100]");
  const std::size_t n = pred.size();
  const std::size_t take = (static_cast<std::size_t>(k_percent) * n + 99) / 100;

  const auto& key = basis == RankBasis::kTruth ? truth : pred;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return key[a] > key[b]; });

  std::vector<double> p, t;
  for (std::size_t i = 0; i < take; ++i) {
    p.push_back(pred[order[i]]);
    t.push_back(truth[order[i]]);
  }
  return rmse(p, t);
}

int compare_pair(double pred_a, double pred_b) { return pred_b > pred_a ? 2 : 1; }

Task2Metrics task2_metrics(std::span<const PairRecord> pairs, std::span<const int> pred_labels) {
  if (pairs.size() != pred_labels.size()) {
    throw EmptyInput("task2: " + std::to_string(pairs.size()) + " pairs but " +
                     std::to_string(pred_labels.size()) + " predictions");
  }
  Task2Metrics m;
  std::size_t correct = 0;
  double reward = 0.0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& pair = pairs[i];
    if (!pair.label) continue;
    if (*pair.label == 0) {
      ++m.n_ties_excluded;
      continue;
    }
    if (!pair.a.mean_grade || !pair.b.mean_grade) {
      throw DataError("task2: pair " + pair.id + " has a label but no mean grades");
    }
    const double gap = std::abs(*pair.a.mean_grade - *pair.b.mean_grade);
    ++m.n_pairs;
    if (pred_labels[i] == *pair.label) {
      ++correct;
      reward += gap;
    } else {
      reward -= gap;
    }
  }
  if (m.n_pairs == 0) throw NoLabeledPairs("task2: no labeled non-tie pairs to score");
  m.accuracy = static_cast<double>(correct) / static_cast<double>(m.n_pairs);
  m.reward = reward / static_cast<double>(m.n_pairs);
  return m;
}

MetricsReport task1_report(std::span<const double> pred, std::span<const double> truth,
                           RankBasis basis) {
  MetricsReport r;
  r.rmse = rmse(pred, truth);
  for (const int k : kRmseAtPercents) r.rmse_at[k] = rmse_at_k(pred, truth, k, basis);
  r.n_examples = pred.size();
  r.rmse_at_basis = basis;
  return r;
}

std::string MetricsReport::to_json() const {
  nlohmann::ordered_json j;
  j["rmse"] = rmse ? nlohmann::ordered_json(*rmse) : nlohmann::ordered_json(nullptr);
  nlohmann::ordered_json at = nlohmann::ordered_json::object();
  for (const auto& [k, v] : rmse_at) at[std::to_string(k)] = v;
  j["rmse_at"] = at;
  j["n_examples"] = n_examples;
  j["rmse_at_basis"] = to_string(rmse_at_basis);
  if (task2) {
    j["task2"] = {{"accuracy", task2->accuracy},
                  {"reward", task2->reward},
                  {"n_pairs", task2->n_pairs},
                  {"n_ties_excluded", task2->n_ties_excluded}};
  } else {
    j["task2"] = nullptr;
  }
  return j.dump(2);
}

}  // namespace edithumor
