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


#ifndef OMNISCALE_EXPERIMENT_HPP
#define OMNISCALE_EXPERIMENT_HPP

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "omniscale/data_io.hpp"
#include "omniscale/errors.hpp"
#include "omniscale/models.hpp"

namespace omniscale {

inline constexpr int kRunResultSchemaVersion = 1;

/// Reduce-on-plateau on the epoch's mean training loss.
struct PlateauSchedule {
  double factor = 0.5;
  int patience = 50;
  double min_lr = 1e-4;
  double min_delta = 1e-4;
};

/// clamp(round_half_up(n_train / divisor), floor, cap)
struct BatchRule {
  int divisor = 10;
  int floor = 2;
  int cap = 16;
};

struct TrainConfig {
  int epochs = 500;
  double learning_rate = 1e-3;
  PlateauSchedule lr_schedule;
  BatchRule batch_rule;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  bool znormalize = false;
  bool interpolate = false;
  std::optional<int> batch_size;  // overrides batch_rule
  int jobs = 1;
  std::string device = "cpu";
  // Also estimate leave-one-out accuracy on the train split per seed.
  bool leave_one_out = false;

  void validate() const;
};

void to_json(nlohmann::json& j, const TrainConfig& config);
void from_json(const nlohmann::json& j, TrainConfig& config);

/// Seeds first, first+1, ..., first+count-1.
std::vector<std::uint64_t> seed_range(std::uint64_t first, int count);

int batch_size(std::int64_t n_train, const BatchRule& rule = {});
// Override if set, else the rule.
int effective_batch_size(std::int64_t n_train, const TrainConfig& config);

/// Applies the config's preprocessing (interpolation, z-normalization) and
/// right-pads each split to its own longest series.
DatasetPair prepare_pair(DatasetPair pair, const TrainConfig& config);

// Fills n_classes, n_variates and series_length from the training split.
ModelSpec spec_for_dataset(ModelSpec base, const TimeSeriesDataset& train);

struct FitSummary {
  int epochs_run = 0;
  double final_loss = 0.0;
  double final_lr = 0.0;
  int batch_size = 0;
};

/// Adam on softmax cross-entropy over the training split only. Batches are
/// reshuffled every epoch from `seed`. A non-finite loss throws AbortedRun
/// with the 0-based epoch index.
FitSummary fit(Model& model, const TimeSeriesDataset& train, const TrainConfig& config, std::uint64_t seed);

/// Eval-mode accuracy.
double evaluate_accuracy(Model& model, const TimeSeriesDataset& data);
std::vector<int> predict_labels(Model& model, const TimeSeriesDataset& data);

struct SeedResult {
  std::uint64_t seed = 0;
  double accuracy = 0.0;
  std::optional<double> loo_accuracy;
  FitSummary fit;
  double wall_seconds = 0.0;
};

/// fit() on pair.train, then one evaluation on pair.test. `pair` must
/// already be prepared.
SeedResult train(Model& model, const DatasetPair& pair, const TrainConfig& config, std::uint64_t seed);

using ModelFactory = std::function<Model(const ModelSpec&, std::uint64_t)>;

/// Train-side accuracy estimate: for each training series, a fresh model
/// fitted on the remaining ones predicts it. Touches only `train`.
double leave_one_out_accuracy(const TimeSeriesDataset& train, const ModelSpec& spec, const TrainConfig& config,
                              std::uint64_t seed, const ModelFactory& factory = build_model);

struct RunResult {
  int schema_version = kRunResultSchemaVersion;
  std::string dataset;
  std::string model;  // display name, e.g. "os-cnn" or "fcn-scaled(rf=50,fixed_size)"
  nlohmann::json fingerprint;
  std::vector<std::uint64_t> seeds;
  std::vector<double> accuracies;
  double mean_accuracy = 0.0;
  std::vector<double> loo_accuracies;  // per seed, when requested
  double wall_seconds = 0.0;
  bool complete = true;
  std::string error;  // first failure when !complete

  void recompute_mean();
};

void to_json(nlohmann::json& j, const RunResult& result);
void from_json(const nlohmann::json& j, RunResult& result);

/// Thrown by run_protocol when a seed diverged; partial() holds the seeds
/// that finished, marked incomplete.
class ProtocolAborted : public AbortedRun {
 public:
  ProtocolAborted(const std::string& what, int epoch, RunResult partial)
      : AbortedRun(what, epoch), partial_(std::move(partial)) {}
  const RunResult& partial() const { return partial_; }

 private:
  RunResult partial_;
};

// Called from worker threads after each seed finishes.
using SeedCallback = std::function<void(const Model&, const SeedResult&)>;

/// One model per seed, trained and evaluated independently, up to
/// config.jobs at a time. Per-seed results do not depend on jobs.
RunResult run_protocol(const DatasetPair& pair, const ModelSpec& spec, const TrainConfig& config,
                       const ModelFactory& factory = build_model, const std::string& model_name = {},
                       const SeedCallback& on_seed = {});

/// Mean over seeds from already-known accuracies.
RunResult aggregate(std::string dataset, std::string model, nlohmann::json fingerprint,
                    std::vector<std::uint64_t> seeds, std::vector<double> accuracies, double wall_seconds = 0.0);

/// FCN kernel multiplier giving receptive field approximately `rf`
/// (reference FCN: 1 + 7 + 4 + 2 = 14 at scale 1).
double fcn_scale_for_rf(std::int64_t rf);

struct RankRow {
  std::string model;
  double mean_accuracy = 0.0;
  double rank = 0.0;  // 1 = best, ties share the mean rank
  std::int64_t weights = 0;
  std::int64_t receptive_field = 0;
};

struct SweepResult {
  std::vector<RunResult> runs;  // one per rf value, then the OS-CNN
  std::vector<RankRow> ranks;
};

/// Trains a scaled FCN per rf value plus one OS-CNN under the same weight
/// budget. mode must be kFixedChannels or kFixedSize.
SweepResult rf_sweep(const DatasetPair& pair, const std::vector<std::int64_t>& rf_values, FcnMode mode,
                     const TrainConfig& config, const ModelSpec& base = {});

nlohmann::json sweep_json(const SweepResult& sweep);
std::string rank_table_csv(const SweepResult& sweep);

/// Append-only JSON-lines store, safe for concurrent writers in one process.
void append_jsonl(const std::filesystem::path& path, const RunResult& result);
std::vector<RunResult> read_jsonl(const std::filesystem::path& path);

}  // namespace omniscale

#endif  // OMNISCALE_EXPERIMENT_HPP
