/*
 * Copyright 2026 The omniscale Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


#ifndef OMNISCALE_STATS_EVAL_HPP
#define OMNISCALE_STATS_EVAL_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "omniscale/experiment.hpp"

namespace omniscale {

enum class Provenance { kOwnRun, kPublishedTable };

std::string to_string(Provenance p);

/// Accuracies indexed (dataset, classifier). NaN marks a missing cell.
struct AccuracyMatrix {
  std::vector<std::string> classifiers;
  std::vector<std::string> datasets;
  Eigen::MatrixXd values;
  std::vector<Provenance> provenance;  // row-major, one per cell

  Index n_datasets() const { return values.rows(); }
  Index n_classifiers() const { return values.cols(); }
  Index classifier_index(std::string_view name) const;
  Index dataset_index(std::string_view name) const;
  Provenance provenance_at(Index dataset, Index classifier) const {
    return provenance[static_cast<std::size_t>(dataset * n_classifiers() + classifier)];
  }
  // Column for `name`; throws InvalidArgument if it has missing cells.
  Eigen::VectorXd column(std::string_view name) const;

  void validate() const;
};

/// Header row holds classifier names (first cell labels the dataset column),
/// then one row per dataset. Empty cells are missing.
AccuracyMatrix parse_accuracy_csv_text(std::string_view text, Provenance provenance = Provenance::kPublishedTable);
AccuracyMatrix parse_accuracy_csv(const std::filesystem::path& path, Provenance provenance = Provenance::kPublishedTable);
std::string accuracy_csv(const AccuracyMatrix& matrix);

/// Side-by-side join on dataset name. Both inputs must cover the same
/// datasets (in any order); classifier names must not collide.
AccuracyMatrix join_classifiers(const AccuracyMatrix& left, const AccuracyMatrix& right);

enum class RunMetric { kTestAccuracy, kLeaveOneOut };

/// Mean accuracy of each (dataset, model) in a run store; later entries
/// replace earlier ones. Incomplete runs, and runs without the requested
/// metric, are skipped.
AccuracyMatrix matrix_from_runs(const std::vector<RunResult>& runs, RunMetric metric = RunMetric::kTestAccuracy);

/// Half-up rounding to 8 decimals of the value's shortest decimal form.
double round8(double x);
// Same rounding as an integer count of 1e-8 units.
std::int64_t round8_units(double x);

struct WinTally {
  int a_wins = 0;
  int b_wins = 0;
  int ties = 0;
};

/// Per-dataset comparison after round8.
WinTally pairwise_wins(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

struct RankTable {
  Eigen::MatrixXd per_dataset;  // (datasets, classifiers); 1 = best
  Eigen::VectorXd average;
};

/// Ranks after round8; ties share the mean rank.
RankTable average_ranks(const AccuracyMatrix& matrix);

struct SignedRankResult {
  int n = 0;  // nonzero differences
  double w_plus = 0.0;
  double w_minus = 0.0;
  double p_value = 1.0;
  bool exact = false;
};

/// Two-sided Wilcoxon signed-rank test on round8 differences a - b. Zero
/// differences are dropped; exact null distribution for n <= 12, normal
/// approximation with tie correction above.
SignedRankResult wilcoxon_signed_rank(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

inline constexpr int kExactSignedRankLimit = 12;

/// Exact two-sided p for W+ given the tied-averaged ranks.
double exact_signed_rank_p(const std::vector<double>& abs_ranks, double w_plus);

/// Holm step-down adjusted p-values (same order as the input).
std::vector<double> holm_adjust(const std::vector<double>& p_values);

struct PairTest {
  Index a = 0;
  Index b = 0;
  SignedRankResult test;
  double adjusted_p = 1.0;
  bool significant = false;
};

struct CriticalDifference {
  double alpha = 0.05;
  std::vector<std::string> classifiers;
  Eigen::VectorXd average_ranks;
  std::vector<Index> order;  // classifier indices, best rank first
  std::vector<PairTest> pairs;
  std::vector<std::vector<Index>> cliques;  // in rank order
};

/// All-pairs Wilcoxon with Holm correction. Cliques are maximal runs of
/// consecutive classifiers in rank order with no significant pair inside;
/// a classifier that belongs to no larger clique forms its own.
CriticalDifference wilcoxon_holm(const AccuracyMatrix& matrix, double alpha = 0.05);

// {ranks: {name: rank}, cliques: [[names]], alpha, pairs: [...]}
nlohmann::json critical_difference_json(const CriticalDifference& cd);

enum class Quadrant { kTruePositive, kFalsePositive, kTrueNegative, kFalseNegative };

std::string to_string(Quadrant q);

/// Gains are accuracy ratios candidate / baseline.
Quadrant texas_quadrant(double expected_gain, double actual_gain);

struct SharpshooterPoint {
  std::string dataset;
  double expected_gain = 0.0;
  double actual_gain = 0.0;
  Quadrant quadrant = Quadrant::kTrueNegative;
};

/// Expected gain from train-side accuracy estimates (supplied, e.g.
/// leave-one-out on the train split), actual gain from test accuracies.
std::vector<SharpshooterPoint> texas_sharpshooter(const AccuracyMatrix& train_side, const AccuracyMatrix& test_side,
                                                  const std::string& candidate, const std::string& baseline);
std::string sharpshooter_csv(const std::vector<SharpshooterPoint>& points);

struct RelativeRow {
  std::string baseline;
  std::string dataset;
  double candidate_accuracy = 0.0;
  double baseline_accuracy = 0.0;
  double delta = 0.0;
};

/// candidate - baseline per position.
Eigen::VectorXd relative_deltas(const Eigen::VectorXd& candidate, const Eigen::VectorXd& baseline);

/// One block per baseline, each sorted by ascending delta (dataset name
/// breaks ties).
std::vector<RelativeRow> relative_accuracy_report(const AccuracyMatrix& matrix, const std::string& candidate,
                                                  const std::vector<std::string>& baselines);
std::string relative_accuracy_csv(const std::vector<RelativeRow>& rows);

}  // namespace omniscale

#endif  // OMNISCALE_STATS_EVAL_HPP
