#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "edithumor/corpus.hpp"

namespace edithumor {

// Which ranking picks the top-k% subset for RMSE@k.
enum class RankBasis { kTruth, kPrediction };

std::string to_string(RankBasis basis);
RankBasis parse_rank_basis(const std::string& text);

double rmse(std::span<const double> pred, std::span<const double> truth);

/// RMSE over the ceil(k*n/100) items ranked highest by `basis` (ground truth
/// by default). Ties keep input order.
double rmse_at_k(std::span<const double> pred, std::span<const double> truth, int k_percent,
                 RankBasis basis = RankBasis::kTruth);

/// 1 if a > b, 2 if b > a, 1 on equality.
int compare_pair(double pred_a, double pred_b);

struct Task2Metrics {
  double accuracy = 0.0;
  double reward = 0.0;
  std::size_t n_pairs = 0;  // pairs scored, ties excluded
  std::size_t n_ties_excluded = 0;
};

/// Scores predicted labels (1 or 2) against labeled pairs. Label-0 pairs are
/// excluded; reward averages +|grade_a - grade_b| for correct predictions and
/// the negative for wrong ones. Throws NoLabeledPairs when nothing is scored.
Task2Metrics task2_metrics(std::span<const PairRecord> pairs, std::span<const int> pred_labels);

inline constexpr int kRmseAtPercents[] = {10, 20, 30};

struct MetricsReport {
  std::optional<double> rmse;
  std::map<int, double> rmse_at;
  std::size_t n_examples = 0;
  RankBasis rmse_at_basis = RankBasis::kTruth;
  std::optional<Task2Metrics> task2;

  std::string to_json() const;
};

MetricsReport task1_report(std::span<const double> pred, std::span<const double> truth,
                           RankBasis basis = RankBasis::kTruth);

}  // namespace edithumor
