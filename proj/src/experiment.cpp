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


#include "omniscale/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

namespace omniscale {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

Tensor gather(const Tensor& all, std::span<const std::size_t> rows) {
  Tensor out({static_cast<Index>(rows.size()), all.shape()[1], all.shape()[2]});
  for (std::size_t i = 0; i < rows.size(); ++i) out.sample(static_cast<Index>(i)) = all.sample(static_cast<Index>(rows[i]));
  return out;
}

std::string default_model_name(const ModelSpec& spec) {
  std::string name = to_string(spec.kind);
  if (spec.kind == ModelKind::kOsCnnRes) name += ":" + std::to_string(spec.depth);
  return name;
}

std::string mode_name(FcnMode mode) { return mode == FcnMode::kFixedSize ? "fixed_size" : "fixed_channels"; }

// Shuffling uses a stream independent of the one that initialised the model.
std::mt19937_64 batch_rng(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), 0x6261u};
  return std::mt19937_64(seq);
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1) throw InvalidArgument("epochs must be >= 1");
  if (!(learning_rate > 0.0)) throw InvalidArgument("learning rate must be positive");
  if (seeds.empty()) throw InvalidArgument("seed list must be nonempty");
  if (!(lr_schedule.factor > 0.0 && lr_schedule.factor <= 1.0)) throw InvalidArgument("plateau factor must be in (0, 1]");
  if (lr_schedule.patience < 1) throw InvalidArgument("plateau patience must be >= 1");
  if (lr_schedule.min_lr < 0.0) throw InvalidArgument("min lr must be >= 0");
  if (batch_rule.divisor < 1 || batch_rule.floor < 1 || batch_rule.cap < batch_rule.floor)
    throw InvalidArgument("batch rule needs divisor >= 1 and 1 <= floor <= cap");
  if (batch_size && *batch_size < 1) throw InvalidArgument("batch size must be >= 1");
  if (jobs < 1) throw InvalidArgument("jobs must be >= 1");
  if (device != "cpu") throw InvalidArgument("only device=cpu is supported");
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = nlohmann::json{{"epochs", c.epochs},
                     {"learning_rate", c.learning_rate},
                     {"lr_schedule",
                      {{"type", "reduce_on_plateau(train loss)"},
                       {"factor", c.lr_schedule.factor},
                       {"patience", c.lr_schedule.patience},
                       {"min_lr", c.lr_schedule.min_lr},
                       {"min_delta", c.lr_schedule.min_delta}}},
                     {"batch_rule",
                      {{"divisor", c.batch_rule.divisor}, {"floor", c.batch_rule.floor}, {"cap", c.batch_rule.cap}}},
                     {"seeds", c.seeds},
                     {"znormalize", c.znormalize},
                     {"interpolate", c.interpolate},
                     {"batch_size", c.batch_size ? nlohmann::json(*c.batch_size) : nlohmann::json(nullptr)},
                     {"optimizer", "adam(beta1=0.9, beta2=0.999, eps=1e-8)"},
                     {"loss", "softmax cross-entropy"},
                     {"device", c.device},
                     {"leave_one_out", c.leave_one_out}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  c = TrainConfig{};
  c.epochs = j.at("epochs").get<int>();
  c.learning_rate = j.at("learning_rate").get<double>();
  if (j.contains("lr_schedule")) {
    const auto& s = j["lr_schedule"];
    c.lr_schedule.factor = s.value("factor", c.lr_schedule.factor);
    c.lr_schedule.patience = s.value("patience", c.lr_schedule.patience);
    c.lr_schedule.min_lr = s.value("min_lr", c.lr_schedule.min_lr);
    c.lr_schedule.min_delta = s.value("min_delta", c.lr_schedule.min_delta);
  }
  if (j.contains("batch_rule")) {
    const auto& b = j["batch_rule"];
    c.batch_rule = {b.value("divisor", 10), b.value("floor", 2), b.value("cap", 16)};
  }
  c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  c.znormalize = j.value("znormalize", false);
  c.interpolate = j.value("interpolate", false);
  if (j.contains("batch_size") && !j["batch_size"].is_null()) c.batch_size = j["batch_size"].get<int>();
  c.device = j.value("device", std::string("cpu"));
  c.leave_one_out = j.value("leave_one_out", false);
}

std::vector<std::uint64_t> seed_range(std::uint64_t first, int count) {
  if (count < 1) throw InvalidArgument("seed count must be >= 1");
  std::vector<std::uint64_t> seeds(static_cast<std::size_t>(count));
  std::iota(seeds.begin(), seeds.end(), first);
  return seeds;
}

int batch_size(std::int64_t n_train, const BatchRule& rule) {
  if (n_train < 1) throw InvalidArgument("n_train must be >= 1");
  // round half up of n / divisor in integers
  const std::int64_t rounded = (2 * n_train + rule.divisor) / (2 * rule.divisor);
  return static_cast<int>(std::clamp<std::int64_t>(rounded, rule.floor, rule.cap));
}

int effective_batch_size(std::int64_t n_train, const TrainConfig& config) {
  return config.batch_size ? *config.batch_size : batch_size(n_train, config.batch_rule);
}

DatasetPair prepare_pair(DatasetPair pair, const TrainConfig& config) {
  for (TimeSeriesDataset* ds : {&pair.train, &pair.test}) {
    if (config.interpolate) *ds = interpolate_missing(std::move(*ds));
    if (config.znormalize) *ds = znormalize(std::move(*ds));
    *ds = pad_to_max(std::move(*ds));
  }
  return pair;
}

ModelSpec spec_for_dataset(ModelSpec base, const TimeSeriesDataset& train) {
  if (train.empty()) throw InvalidArgument("training split is empty");
  base.n_classes = train.n_classes();
  base.n_variates = train.n_variates();
  base.series_length = train.max_length();
  return base;
}

FitSummary fit(Model& model, const TimeSeriesDataset& train, const TrainConfig& config, std::uint64_t seed) {
  config.validate();
  const Tensor x = to_tensor(train);
  const std::size_t n = train.size();
  FitSummary summary;
  summary.batch_size = static_cast<int>(std::min<std::size_t>(
      static_cast<std::size_t>(effective_batch_size(static_cast<std::int64_t>(n), config)), n));

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto rng = batch_rng(seed);
  auto params = model.parameters();
  std::vector<AdamState> states;
  AdamOptions adam;
  adam.lr = config.learning_rate;

  double best = std::numeric_limits<double>::infinity();
  int wait = 0;
  const std::size_t bs = static_cast<std::size_t>(summary.batch_size);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (std::size_t start = 0; start < n;) {
      std::size_t stop = std::min(n, start + bs);
      // A trailing batch of one would leave batch norm with one sample.
      if (n - stop == 1) stop = n;
      const std::span<const std::size_t> rows(order.data() + start, stop - start);
      std::vector<int> y;
      y.reserve(rows.size());
      for (std::size_t r : rows) y.push_back(train.labels[r]);

      double value = 0.0;
      try {
        Tape tape;
        Var loss = softmax_cross_entropy(model.forward(tape, gather(x, rows), Mode::kTrain), y);
        value = loss.value()(0, 0);
        if (!std::isfinite(value)) throw AbortedRun("non-finite training loss", epoch);
        for (auto* p : params) p->zero_grad();
        tape.backward(loss);
      } catch (const std::domain_error& e) {
        throw AbortedRun(std::string("training diverged: ") + e.what(), epoch);
      }
      adam_step(params, states, adam);
      for (auto* p : params)
        if (!p->value.array().isFinite().all()) throw AbortedRun("non-finite parameter " + p->name, epoch);
      total += value * static_cast<double>(rows.size());
      start = stop;
    }
    summary.final_loss = total / static_cast<double>(n);
    summary.epochs_run = epoch + 1;

    if (summary.final_loss < best - config.lr_schedule.min_delta) {
      best = summary.final_loss;
      wait = 0;
    } else if (++wait >= config.lr_schedule.patience) {
      adam.lr = std::max(adam.lr * config.lr_schedule.factor, config.lr_schedule.min_lr);
      wait = 0;
    }
  }
  summary.final_lr = adam.lr;
  return summary;
}

std::vector<int> predict_labels(Model& model, const TimeSeriesDataset& data) {
  const Tensor x = to_tensor(data);
  constexpr std::size_t kChunk = 64;
  std::vector<int> out;
  out.reserve(data.size());
  for (std::size_t start = 0; start < data.size(); start += kChunk) {
    std::vector<std::size_t> rows(std::min(kChunk, data.size() - start));
    std::iota(rows.begin(), rows.end(), start);
    for (int label : argmax_rows(model.predict_proba(gather(x, rows)))) out.push_back(label);
  }
  return out;
}

double evaluate_accuracy(Model& model, const TimeSeriesDataset& data) {
  const auto predicted = predict_labels(model, data);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) correct += predicted[i] == data.labels[i];
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

SeedResult train(Model& model, const DatasetPair& pair, const TrainConfig& config, std::uint64_t seed) {
  if (pair.train.empty() || pair.test.empty()) throw InvalidArgument("train needs nonempty train and test splits");
  if (pair.train.class_names != pair.test.class_names) throw InvalidArgument("train/test label maps differ; align them");
  const auto start = Clock::now();
  SeedResult result;
  result.seed = seed;
  result.fit = fit(model, pair.train, config, seed);
  result.accuracy = evaluate_accuracy(model, pair.test);
  result.wall_seconds = seconds_since(start);
  return result;
}

double leave_one_out_accuracy(const TimeSeriesDataset& train, const ModelSpec& spec, const TrainConfig& config,
                              std::uint64_t seed, const ModelFactory& factory) {
  if (train.size() < 3) throw InvalidArgument("leave-one-out needs at least 3 training series");
  std::size_t correct = 0;
  for (std::size_t held = 0; held < train.size(); ++held) {
    TimeSeriesDataset rest = train;
    rest.samples.erase(rest.samples.begin() + static_cast<std::ptrdiff_t>(held));
    rest.labels.erase(rest.labels.begin() + static_cast<std::ptrdiff_t>(held));
    if (!rest.original_lengths.empty())
      rest.original_lengths.erase(rest.original_lengths.begin() + static_cast<std::ptrdiff_t>(held));
    TimeSeriesDataset one = train;
    one.samples = {train.samples[held]};
    one.labels = {train.labels[held]};
    one.original_lengths.clear();
    Model model = factory(spec, seed);
    fit(model, rest, config, seed);
    correct += predict_labels(model, one).front() == train.labels[held];
  }
  return static_cast<double>(correct) / static_cast<double>(train.size());
}

void RunResult::recompute_mean() {
  mean_accuracy = accuracies.empty()
                      ? 0.0
                      : std::accumulate(accuracies.begin(), accuracies.end(), 0.0) / static_cast<double>(accuracies.size());
}

void to_json(nlohmann::json& j, const RunResult& r) {
  j = nlohmann::json{{"schema_version", r.schema_version},
                     {"dataset", r.dataset},
                     {"model", r.model},
                     {"fingerprint", r.fingerprint},
                     {"seeds", r.seeds},
                     {"accuracies", r.accuracies},
                     {"mean_accuracy", r.mean_accuracy},
                     {"wall_seconds", r.wall_seconds},
                     {"complete", r.complete}};
  if (!r.error.empty()) j["error"] = r.error;
  if (!r.loo_accuracies.empty()) j["loo_accuracies"] = r.loo_accuracies;
}

void from_json(const nlohmann::json& j, RunResult& r) {
  r = RunResult{};
  r.schema_version = j.at("schema_version").get<int>();
  if (r.schema_version > kRunResultSchemaVersion)
    throw InvalidArgument("RunResult schema " + std::to_string(r.schema_version) + " is newer than supported (" +
                          std::to_string(kRunResultSchemaVersion) + ")");
  r.dataset = j.at("dataset").get<std::string>();
  r.model = j.value("model", std::string());
  r.fingerprint = j.value("fingerprint", nlohmann::json::object());
  r.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  r.accuracies = j.at("accuracies").get<std::vector<double>>();
  r.mean_accuracy = j.at("mean_accuracy").get<double>();
  r.wall_seconds = j.value("wall_seconds", 0.0);
  r.complete = j.value("complete", true);
  r.error = j.value("error", std::string());
  r.loo_accuracies = j.value("loo_accuracies", std::vector<double>{});
}

RunResult aggregate(std::string dataset, std::string model, nlohmann::json fingerprint,
                    std::vector<std::uint64_t> seeds, std::vector<double> accuracies, double wall_seconds) {
  if (seeds.size() != accuracies.size()) throw InvalidArgument("one accuracy per seed expected");
  for (double a : accuracies)
    if (!(a >= 0.0 && a <= 1.0)) throw InvalidArgument("accuracy outside [0, 1]");
  RunResult r;
  r.dataset = std::move(dataset);
  r.model = std::move(model);
  r.fingerprint = std::move(fingerprint);
  r.seeds = std::move(seeds);
  r.accuracies = std::move(accuracies);
  r.wall_seconds = wall_seconds;
  r.recompute_mean();
  return r;
}

RunResult run_protocol(const DatasetPair& pair, const ModelSpec& spec, const TrainConfig& config,
                       const ModelFactory& factory, const std::string& model_name, const SeedCallback& on_seed) {
  config.validate();
  const auto start = Clock::now();
  const ModelSpec resolved = spec_for_dataset(spec, pair.train);
  const std::size_t n_seeds = config.seeds.size();

  nlohmann::json fingerprint;
  {
    Model probe = factory(resolved, config.seeds.front());
    fingerprint["model"] = probe.fingerprint();
    fingerprint["model"].erase("seed");
  }
  fingerprint["train_config"] = config;
  fingerprint["batch_size"] = effective_batch_size(static_cast<std::int64_t>(pair.train.size()), config);
  fingerprint["data"] = {{"n_train", pair.train.size()},
                         {"n_test", pair.test.size()},
                         {"n_classes", pair.train.n_classes()},
                         {"n_variates", pair.train.n_variates()},
                         {"series_length", pair.train.max_length()},
                         {"normalization", pair.train.normalization}};

  std::vector<std::optional<SeedResult>> results(n_seeds);
  std::vector<std::optional<std::pair<std::string, int>>> aborted(n_seeds);
  std::vector<std::exception_ptr> failures(n_seeds);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n_seeds; i = next++) {
      try {
        Model model = factory(resolved, config.seeds[i]);
        results[i] = train(model, pair, config, config.seeds[i]);
        if (config.leave_one_out)
          results[i]->loo_accuracy = leave_one_out_accuracy(pair.train, resolved, config, config.seeds[i], factory);
        if (on_seed) on_seed(model, *results[i]);
      } catch (const AbortedRun& e) {
        aborted[i] = {e.what(), e.epoch()};
      } catch (...) {
        failures[i] = std::current_exception();
      }
    }
  };
  const std::size_t n_threads = std::min<std::size_t>(static_cast<std::size_t>(config.jobs), n_seeds);
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }
  for (const auto& f : failures)
    if (f) std::rethrow_exception(f);

  RunResult out;
  out.dataset = pair.train.name;
  out.model = model_name.empty() ? default_model_name(resolved) : model_name;
  out.fingerprint = std::move(fingerprint);
  std::optional<std::pair<std::string, int>> first_abort;
  for (std::size_t i = 0; i < n_seeds; ++i) {
    if (results[i]) {
      out.seeds.push_back(results[i]->seed);
      out.accuracies.push_back(results[i]->accuracy);
      if (results[i]->loo_accuracy) out.loo_accuracies.push_back(*results[i]->loo_accuracy);
    } else if (!first_abort) {
      first_abort = aborted[i];
      out.error = "seed " + std::to_string(config.seeds[i]) + ": " + aborted[i]->first;
    }
  }
  out.recompute_mean();
  out.wall_seconds = seconds_since(start);
  if (first_abort) {
    out.complete = false;
    throw ProtocolAborted(out.error, first_abort->second, out);
  }
  return out;
}

double fcn_scale_for_rf(std::int64_t rf) {
  if (rf < 1) throw InvalidArgument("receptive field must be >= 1");
  return static_cast<double>(rf + 2) / 16.0;
}

SweepResult rf_sweep(const DatasetPair& pair, const std::vector<std::int64_t>& rf_values, FcnMode mode,
                     const TrainConfig& config, const ModelSpec& base) {
  if (mode != FcnMode::kFixedChannels && mode != FcnMode::kFixedSize)
    throw InvalidArgument("rf_sweep mode must be fixed_channels or fixed_size");
  if (rf_values.empty()) throw InvalidArgument("rf_sweep needs at least one rf value");
  SweepResult sweep;
  for (std::int64_t rf : rf_values) {
    ModelSpec spec = base;
    spec.kind = ModelKind::kFcnScaled;
    spec.fcn_mode = mode;
    spec.rf_scale = fcn_scale_for_rf(rf);
    sweep.runs.push_back(
        run_protocol(pair, spec, config, build_model, "fcn-scaled(rf=" + std::to_string(rf) + "," + mode_name(mode) + ")"));
  }
  ModelSpec os = base;
  os.kind = ModelKind::kOsCnn;
  os.depth = 1;
  sweep.runs.push_back(run_protocol(pair, os, config, build_model, "os-cnn"));

  std::vector<double> means;
  for (const auto& r : sweep.runs) means.push_back(r.mean_accuracy);
  for (std::size_t i = 0; i < sweep.runs.size(); ++i) {
    RankRow row;
    row.model = sweep.runs[i].model;
    row.mean_accuracy = means[i];
    const double better = static_cast<double>(std::count_if(means.begin(), means.end(), [&](double m) { return m > means[i]; }));
    const double tied = static_cast<double>(std::count(means.begin(), means.end(), means[i]));
    row.rank = better + (tied + 1.0) / 2.0;
    const auto& fp = sweep.runs[i].fingerprint["model"];
    row.weights = fp.value("weight_count", std::int64_t{0});
    row.receptive_field = fp.value("max_receptive_field", std::int64_t{0});
    sweep.ranks.push_back(row);
  }
  return sweep;
}

nlohmann::json sweep_json(const SweepResult& sweep) {
  nlohmann::json ranks = nlohmann::json::array();
  for (const auto& r : sweep.ranks)
    ranks.push_back({{"model", r.model},
                     {"mean_accuracy", r.mean_accuracy},
                     {"rank", r.rank},
                     {"weights", r.weights},
                     {"receptive_field", r.receptive_field}});
  return {{"runs", sweep.runs}, {"ranks", ranks}};
}

std::string rank_table_csv(const SweepResult& sweep) {
  std::ostringstream os;
  os.precision(17);
  os << "model,receptive_field,weights,mean_accuracy,rank\n";
  for (const auto& r : sweep.ranks)
    os << '"' << r.model << "\"," << r.receptive_field << ',' << r.weights << ',' << r.mean_accuracy << ',' << r.rank << '\n';
  return os.str();
}

void append_jsonl(const std::filesystem::path& path, const RunResult& result) {
  static std::mutex mutex;
  const std::string line = nlohmann::json(result).dump() + "\n";
  std::lock_guard lock(mutex);
  std::ofstream out(path, std::ios::app | std::ios::binary);
  if (!out) throw InvalidArgument("cannot open " + path.string() + " for appending");
  out << line;
  out.flush();
  if (!out) throw InvalidArgument("write to " + path.string() + " failed");
}

std::vector<RunResult> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  std::vector<RunResult> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(nlohmann::json::parse(line).get<RunResult>());
    } catch (const std::exception& e) {
      throw ParseError(std::string("bad RunResult: ") + e.what(), line_no);
    }
  }
  return out;
}

}  // namespace omniscale
