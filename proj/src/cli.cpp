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


#include "omniscale/cli.hpp"

#include <filesystem>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <sstream>

#include <CLI11.hpp>

#include "omniscale/checkpoint.hpp"
#include "omniscale/data_io.hpp"
#include "omniscale/errors.hpp"
#include "omniscale/experiment.hpp"
#include "omniscale/kernel_config.hpp"
#include "omniscale/models.hpp"
#include "omniscale/stats_eval.hpp"

namespace omniscale {

namespace {

struct DataFlags {
  std::string dataset;
  std::string data_root;
  std::string manifest;
  bool require_equal_length = false;
};

struct TrainFlags {
  int epochs = 500;
  double lr = 1e-3;
  int seeds = 10;
  std::uint64_t seed = 0;
  bool znorm = false;
  bool interpolate = false;
  int batch_size = 0;
  int jobs = 1;
  int patience = 50;
  double factor = 0.5;
  double min_lr = 1e-4;
  bool loo = false;
};

void add_data_flags(CLI::App* app, DataFlags& f) {
  app->add_option("--dataset", f.dataset, "Dataset name")->required();
  app->add_option("--data-root", f.data_root, std::string("Archive root (default $") + kDataRootEnv + ")");
  app->add_option("--manifest", f.manifest, "JSON manifest mapping names to train/test files");
  app->add_flag("--require-equal-length", f.require_equal_length, "Reject ragged series");
}

void add_train_flags(CLI::App* app, TrainFlags& f) {
  app->add_option("--epochs", f.epochs, "Training epochs")->check(CLI::PositiveNumber);
  app->add_option("--lr", f.lr, "Initial learning rate")->check(CLI::PositiveNumber);
  app->add_option("--seeds", f.seeds, "Number of seeds")->check(CLI::PositiveNumber);
  app->add_option("--seed", f.seed, "First seed");
  app->add_flag("--znorm", f.znorm, "Z-normalize each series");
  app->add_flag("--interpolate", f.interpolate, "Linearly interpolate missing values");
  app->add_option("--batch-size", f.batch_size, "Override the batch-size rule")->check(CLI::PositiveNumber);
  app->add_option("--jobs", f.jobs, "Seeds trained in parallel")->check(CLI::PositiveNumber);
  app->add_option("--plateau-patience", f.patience, "Epochs without improvement before halving lr")
      ->check(CLI::PositiveNumber);
  app->add_option("--plateau-factor", f.factor, "Learning-rate reduction factor")->check(CLI::Range(0.0, 1.0));
  app->add_option("--min-lr", f.min_lr, "Learning-rate floor")->check(CLI::NonNegativeNumber);
  app->add_flag("--loo", f.loo, "Also record leave-one-out accuracy on the train split");
}

TrainConfig to_config(const TrainFlags& f) {
  TrainConfig c;
  c.epochs = f.epochs;
  c.learning_rate = f.lr;
  c.seeds = seed_range(f.seed, f.seeds);
  c.znormalize = f.znorm;
  c.interpolate = f.interpolate;
  if (f.batch_size > 0) c.batch_size = f.batch_size;
  c.jobs = f.jobs;
  c.lr_schedule.patience = f.patience;
  c.lr_schedule.factor = f.factor;
  c.lr_schedule.min_lr = f.min_lr;
  c.leave_one_out = f.loo;
  c.validate();
  return c;
}

DatasetPair load_pair(const DataFlags& f) {
  const auto manifest = f.manifest.empty() ? std::nullopt : std::optional<std::filesystem::path>(f.manifest);
  const auto root = f.data_root.empty() ? std::nullopt : std::optional<std::filesystem::path>(f.data_root);
  return load_dataset_pair(locate_dataset(f.dataset, manifest, root), f.dataset,
                           ParseOptions{f.require_equal_length});
}

void emit(std::ostream& out, const nlohmann::json& j, bool pretty) { out << (pretty ? j.dump(2) : j.dump()) << "\n"; }

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? sep : "") + parts[i];
  return out;
}

// ---- analyze ----

struct AnalyzeFlags {
  std::int64_t length = 0;
  std::int64_t rf = 0;
  int variates = 1;
  std::int64_t budget = kFcnReferenceWeights;
  int channels = 0;
  bool pretty = false;
};

int run_analyze(const AnalyzeFlags& f, std::ostream& out) {
  const std::int64_t target = f.rf > 0 ? f.rf : (f.length + 1) / 2;
  const int m = select_max_prime_for_rf(target);
  const int c = f.channels > 0 ? f.channels : allocate_channels(f.budget, OSBlockSpec::canonical(m).layer_kernel_lists, f.variates);
  const OSBlockSpec spec = OSBlockSpec::canonical(m, f.variates, c);
  const CostBreakdown cost = count_block_weights(spec);
  const bool covered = covers_all_up_to(spec.layer_kernel_lists, target);

  nlohmann::json j{{"N", f.length},
                   {"rf_target", target},
                   {"M", m},
                   {"kernel_lists", spec.layer_kernel_lists},
                   {"coverage_ok", covered},
                   {"branch_channels", c},
                   {"in_channels", f.variates},
                   {"weight_budget", f.budget},
                   {"per_layer_weights", cost.per_layer_weights},
                   {"total_weights", cost.total_weights},
                   {"max_rf", cost.max_rf},
                   {"comparison", compare_sequences(target)}};
  if (!f.pretty) {
    emit(out, j, false);
    return kExitOk;
  }
  out << "series length N      " << f.length << "\n"
      << "target RF            1.." << target << "\n"
      << "largest prime M      " << m << "\n";
  for (std::size_t l = 0; l < spec.layer_kernel_lists.size(); ++l) {
    std::vector<std::string> ks;
    for (int k : spec.layer_kernel_lists[l]) ks.push_back(std::to_string(k));
    out << "layer " << l + 1 << " kernels       [" << join(ks, ", ") << "]  weights " << cost.per_layer_weights[l] << "\n";
  }
  out << "coverage             " << (covered ? "ok" : "FAILED") << "\n"
      << "branch channels      " << c << "\n"
      << "total weights        " << cost.total_weights << " (budget " << f.budget << ")\n";
  return kExitOk;
}

// ---- train / sweep ----

struct ModelFlags {
  std::string model = "os-cnn";
  std::int64_t budget = kFcnReferenceWeights;
  int channels = 0;
  std::int64_t rf = 0;
};

ModelSpec to_spec(const ModelFlags& f) {
  ModelSpec spec = parse_model_kind(f.model);
  spec.weight_budget = f.budget;
  if (f.channels > 0) spec.branch_channels = f.channels;
  if (f.rf > 0) spec.rf_override = f.rf;
  return spec;
}

int run_train(const DataFlags& df, const TrainFlags& tf, const ModelFlags& mf, const std::string& out_path,
              const std::string& checkpoint_dir, bool pretty, std::ostream& out, std::ostream& err) {
  const TrainConfig config = to_config(tf);
  const ModelSpec spec = to_spec(mf);
  const DatasetPair pair = prepare_pair(load_pair(df), config);
  SeedCallback save;
  if (!checkpoint_dir.empty()) {
    std::filesystem::create_directories(checkpoint_dir);
    save = [&](const Model& model, const SeedResult& r) {
      save_checkpoint(model, std::filesystem::path(checkpoint_dir) /
                                 (df.dataset + "_" + mf.model + "_seed" + std::to_string(r.seed) + ".json"));
    };
  }
  auto finish = [&](const RunResult& result) {
    if (!out_path.empty()) append_jsonl(out_path, result);
    if (!pretty) {
      emit(out, result, false);
      return;
    }
    out << result.dataset << "  " << result.model << "\n";
    for (std::size_t i = 0; i < result.seeds.size(); ++i)
      out << "  seed " << std::setw(4) << result.seeds[i] << "  accuracy " << std::fixed << std::setprecision(4)
          << result.accuracies[i] << "\n";
    out << "  mean accuracy " << std::fixed << std::setprecision(4) << result.mean_accuracy << "  ("
        << std::setprecision(1) << result.wall_seconds << " s)\n";
    out.unsetf(std::ios::floatfield);
  };
  try {
    finish(run_protocol(pair, spec, config, build_model, {}, save));
  } catch (const ProtocolAborted& e) {
    finish(e.partial());
    err << "error: " << e.what() << "\n";
    return kExitModuleError;
  }
  return kExitOk;
}

int run_sweep(const DataFlags& df, const TrainFlags& tf, const ModelFlags& mf, const std::vector<std::int64_t>& rfs,
              const std::string& mode, const std::string& out_path, bool pretty, std::ostream& out) {
  const FcnMode fcn_mode = parse_fcn_mode(mode);
  const TrainConfig config = to_config(tf);
  ModelSpec base;
  base.weight_budget = mf.budget;
  const DatasetPair pair = prepare_pair(load_pair(df), config);
  const SweepResult sweep = rf_sweep(pair, rfs, fcn_mode, config, base);
  if (!out_path.empty())
    for (const auto& r : sweep.runs) append_jsonl(out_path, r);
  if (pretty) {
    out << rank_table_csv(sweep);
  } else {
    emit(out, sweep_json(sweep), false);
  }
  return kExitOk;
}

// ---- evaluate ----

int run_evaluate(const DataFlags& df, const std::vector<std::string>& checkpoints, const std::string& split,
                 bool znorm, bool interpolate, bool pretty, std::ostream& out) {
  if (split != "test" && split != "train") throw InvalidArgument("--split must be test or train");
  TrainConfig prep;
  prep.znormalize = znorm;
  prep.interpolate = interpolate;
  const DatasetPair pair = prepare_pair(load_pair(df), prep);
  const TimeSeriesDataset& data = split == "test" ? pair.test : pair.train;

  std::vector<Model> models;
  for (const auto& path : checkpoints) models.push_back(load_checkpoint(path));
  std::vector<Model*> members;
  for (auto& m : models) {
    if (m.spec().n_classes != data.n_classes())
      throw InvalidArgument("checkpoint has " + std::to_string(m.spec().n_classes) + " classes, dataset has " +
                            std::to_string(data.n_classes()));
    members.push_back(&m);
  }
  const auto predicted = argmax_rows(ensemble_predict(members, to_tensor(data)));
  std::size_t correct = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) correct += predicted[i] == data.labels[i];
  const double accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
  nlohmann::json j{{"dataset", df.dataset},
                   {"split", split},
                   {"n", data.size()},
                   {"members", checkpoints.size()},
                   {"accuracy", accuracy},
                   {"predictions", predicted}};
  if (pretty) {
    out << df.dataset << " (" << split << ", " << data.size() << " series, " << checkpoints.size()
        << " member(s)): accuracy " << accuracy << "\n";
  } else {
    emit(out, j, false);
  }
  return kExitOk;
}

// ---- report ----

struct ReportInputs {
  std::vector<std::string> csv;
  std::vector<std::string> runs;
  bool own_run = false;
};

AccuracyMatrix load_matrix(const ReportInputs& in) {
  std::optional<AccuracyMatrix> m;
  auto add = [&](AccuracyMatrix next) { m = m ? join_classifiers(*m, next) : std::move(next); };
  for (const auto& p : in.csv) add(parse_accuracy_csv(p, in.own_run ? Provenance::kOwnRun : Provenance::kPublishedTable));
  for (const auto& p : in.runs) add(matrix_from_runs(read_jsonl(p)));
  if (!m) throw InvalidArgument("report needs at least one --csv or --runs input");
  m->validate();
  return *m;
}

void add_report_inputs(CLI::App* app, ReportInputs& in) {
  app->add_option("--csv", in.csv, "Accuracy CSV (header: dataset,<classifier>...); repeatable")
      ->check(CLI::ExistingFile);
  app->add_option("--runs", in.runs, "JSON-lines run store, joined after the CSVs; repeatable")->check(CLI::ExistingFile);
  app->add_flag("--own-run", in.own_run, "Mark CSV inputs as own runs instead of published tables");
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Omni-scale CNN toolkit for time series classification", "omniscale"};
  app.require_subcommand(1);
  app.fallthrough();
  bool pretty = false;
  app.add_flag("--pretty", pretty, "Human-readable output instead of JSON/CSV");

  AnalyzeFlags af;
  auto* analyze = app.add_subcommand("analyze", "Kernel configuration for a series length");
  analyze->add_option("--length", af.length, "Series length N")->required()->check(CLI::PositiveNumber);
  analyze->add_option("--rf", af.rf, "Target receptive field (default ceil(N/2))")->check(CLI::PositiveNumber);
  analyze->add_option("--variates", af.variates, "Input channels")->check(CLI::PositiveNumber);
  analyze->add_option("--budget", af.budget, "Weight budget for the channel allocation")->check(CLI::PositiveNumber);
  analyze->add_option("--channels", af.channels, "Explicit branch channels")->check(CLI::PositiveNumber);

  DataFlags df;
  TrainFlags tf;
  ModelFlags mf;
  std::string out_path, checkpoint_dir;
  auto* train = app.add_subcommand("train", "Train a model over several seeds");
  add_data_flags(train, df);
  add_train_flags(train, tf);
  train->add_option("--model", mf.model, "os-cnn | os-cnn-res[:K] | mos-cnn | fcn | fcn-scaled");
  train->add_option("--budget", mf.budget, "Conv weight budget for OS models")->check(CLI::PositiveNumber);
  train->add_option("--channels", mf.channels, "Explicit branch channels")->check(CLI::PositiveNumber);
  train->add_option("--rf", mf.rf, "Override the OS block's target receptive field")->check(CLI::PositiveNumber);
  train->add_option("--out", out_path, "Append the RunResult to this JSON-lines file");
  train->add_option("--checkpoint-dir", checkpoint_dir, "Save one checkpoint per seed here");

  std::vector<std::int64_t> rfs;
  std::string mode = "fixed_size";
  auto* sweep = app.add_subcommand("sweep", "Scaled-FCN receptive-field sweep against OS-CNN");
  DataFlags sdf;
  TrainFlags stf;
  add_data_flags(sweep, sdf);
  add_train_flags(sweep, stf);
  sweep->add_option("--rf", rfs, "Receptive fields, comma separated")->required()->delimiter(',');
  sweep->add_option("--mode", mode, "fixed_size | fixed_channels");
  sweep->add_option("--budget", mf.budget, "Weight budget of the OS-CNN entry")->check(CLI::PositiveNumber);
  sweep->add_option("--out", out_path, "Append every RunResult to this JSON-lines file");

  DataFlags edf;
  std::vector<std::string> checkpoints;
  std::string split = "test";
  bool ez = false, ei = false;
  auto* evaluate = app.add_subcommand("evaluate", "Accuracy of saved checkpoints (several form an ensemble)");
  add_data_flags(evaluate, edf);
  evaluate->add_option("--checkpoint", checkpoints, "Checkpoint file; repeat for an ensemble")
      ->required()
      ->check(CLI::ExistingFile);
  evaluate->add_option("--split", split, "test | train");
  evaluate->add_flag("--znorm", ez, "Z-normalize each series");
  evaluate->add_flag("--interpolate", ei, "Linearly interpolate missing values");

  auto* report = app.add_subcommand("report", "Comparisons over accuracy tables");
  report->require_subcommand(1);
  report->fallthrough();
  ReportInputs win_in, rank_in, cd_in, rel_in;
  std::string a_name, b_name, candidate, train_csv, test_csv, sharp_candidate, sharp_baseline;
  std::vector<std::string> baselines;
  double alpha = 0.05;
  auto* wins = report->add_subcommand("wins", "Pairwise (wins, losses, ties) after 8-decimal rounding");
  add_report_inputs(wins, win_in);
  wins->add_option("--a", a_name, "First classifier (default: first column)");
  wins->add_option("--b", b_name, "Second classifier (default: second column)");
  auto* ranks = report->add_subcommand("ranks", "Average ranks");
  add_report_inputs(ranks, rank_in);
  auto* cd = report->add_subcommand("cd", "Wilcoxon-Holm critical-difference data");
  add_report_inputs(cd, cd_in);
  cd->add_option("--alpha", alpha, "Family-wise significance level")->check(CLI::Range(0.0, 1.0));
  auto* relative = report->add_subcommand("relative", "Per-dataset accuracy deltas, CSV");
  add_report_inputs(relative, rel_in);
  relative->add_option("--candidate", candidate, "Candidate classifier")->required();
  relative->add_option("--baseline", baselines, "Baseline classifier; repeatable")->required();
  auto* sharp = report->add_subcommand("sharpshooter", "Expected vs actual gain quadrants, CSV");
  std::vector<std::string> sharp_runs;
  sharp->add_option("--train-csv", train_csv, "Train-side accuracy estimates")->check(CLI::ExistingFile);
  sharp->add_option("--test-csv", test_csv, "Test accuracies")->check(CLI::ExistingFile);
  sharp->add_option("--runs", sharp_runs, "Run stores trained with --loo (instead of the CSVs); repeatable")
      ->check(CLI::ExistingFile);
  sharp->add_option("--candidate", sharp_candidate, "Candidate classifier")->required();
  sharp->add_option("--baseline", sharp_baseline, "Baseline classifier")->required();

  if (args.empty()) {
    err << app.help();
    return kExitUsage;
  }
  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\nRun 'omniscale --help' for usage.\n";
    return kExitUsage;
  }

  try {
    if (*analyze) return run_analyze(AnalyzeFlags{af.length, af.rf, af.variates, af.budget, af.channels, pretty}, out);
    if (*train) return run_train(df, tf, mf, out_path, checkpoint_dir, pretty, out, err);
    if (*sweep) return run_sweep(sdf, stf, mf, rfs, mode, out_path, pretty, out);
    if (*evaluate) return run_evaluate(edf, checkpoints, split, ez, ei, pretty, out);
    if (*wins) {
      const AccuracyMatrix m = load_matrix(win_in);
      if (m.n_classifiers() < 2 && (a_name.empty() || b_name.empty()))
        throw InvalidArgument("wins needs two classifiers");
      const std::string a = a_name.empty() ? m.classifiers[0] : a_name;
      const std::string b = b_name.empty() ? m.classifiers[1] : b_name;
      const WinTally t = pairwise_wins(m.column(a), m.column(b));
      if (pretty) {
        out << a << " vs " << b << ": " << t.a_wins << "/" << t.b_wins << "/" << t.ties << " (wins/losses/ties)\n";
      } else {
        emit(out, {{"a", a}, {"b", b}, {"wins", t.a_wins}, {"losses", t.b_wins}, {"ties", t.ties},
                   {"datasets", m.n_datasets()}}, false);
      }
      return kExitOk;
    }
    if (*ranks) {
      const AccuracyMatrix m = load_matrix(rank_in);
      const RankTable r = average_ranks(m);
      nlohmann::json j = nlohmann::json::object();
      for (Index c = 0; c < m.n_classifiers(); ++c) j[m.classifiers[static_cast<std::size_t>(c)]] = r.average[c];
      emit(out, {{"datasets", m.n_datasets()}, {"average_ranks", j}}, pretty);
      return kExitOk;
    }
    if (*cd) {
      emit(out, critical_difference_json(wilcoxon_holm(load_matrix(cd_in), alpha)), pretty);
      return kExitOk;
    }
    if (*relative) {
      out << relative_accuracy_csv(relative_accuracy_report(load_matrix(rel_in), candidate, baselines));
      return kExitOk;
    }
    if (*sharp) {
      AccuracyMatrix train_side, test_side;
      if (!sharp_runs.empty()) {
        std::vector<RunResult> runs;
        for (const auto& p : sharp_runs)
          for (auto& r : read_jsonl(p)) runs.push_back(std::move(r));
        train_side = matrix_from_runs(runs, RunMetric::kLeaveOneOut);
        test_side = matrix_from_runs(runs, RunMetric::kTestAccuracy);
      } else if (!train_csv.empty() && !test_csv.empty()) {
        train_side = parse_accuracy_csv(train_csv);
        test_side = parse_accuracy_csv(test_csv);
      } else {
        throw InvalidArgument("sharpshooter needs --runs or both --train-csv and --test-csv");
      }
      out << sharpshooter_csv(texas_sharpshooter(train_side, test_side, sharp_candidate, sharp_baseline));
      return kExitOk;
    }
  } catch (const InfeasibleBudget& e) {
    err << "error: " << e.what() << "; raise --budget or pass --channels\n";
    return kExitModuleError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitModuleError;
  }
  err << app.help();
  return kExitUsage;
}

int dispatch(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return dispatch(args, std::cout, std::cerr);
}

}  // namespace omniscale
