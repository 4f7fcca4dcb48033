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


#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "fixtures.hpp"
#include "omniscale/cli.hpp"
#include "omniscale/experiment.hpp"

using namespace omniscale;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = dispatch(args, out, err);
  return {code, out.str(), err.str()};
}

std::filesystem::path make_archive() {
  const auto root = std::filesystem::temp_directory_path() / "omniscale_cli_archive";
  std::filesystem::remove_all(root);
  std::filesystem::create_directories(root / "Waves");
  const auto pair = fixture::sine_square_pair(6, 6, 24, 21);
  std::ofstream(root / "Waves" / "Waves_TRAIN.tsv") << write_ucr_tsv(pair.train);
  std::ofstream(root / "Waves" / "Waves_TEST.tsv") << write_ucr_tsv(pair.test);
  return root;
}

}  // namespace

TEST_CASE("analyze emits the kernel configuration") {
  const auto r = run({"analyze", "--length", "40"});
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["M"] == 13);
  CHECK(j["N"] == 40);
  CHECK(j["coverage_ok"] == true);
  CHECK(j["kernel_lists"][2] == nlohmann::json::array({1, 2}));
  CHECK(j["total_weights"].get<std::int64_t>() <= kFcnReferenceWeights);
  CHECK(j.contains("comparison"));
  CHECK(j.contains("branch_channels"));
  CHECK(nlohmann::json::parse(run({"analyze", "--length", "10"}).out)["M"] == 3);

  const auto pretty = run({"analyze", "--length", "40", "--pretty"});
  CHECK(pretty.code == 0);
  CHECK(pretty.out.find("largest prime M      13") != std::string::npos);
}

TEST_CASE("usage errors exit 2, module errors exit 1") {
  const auto none = run({});
  CHECK(none.code == 2);
  CHECK(none.err.find("Usage") != std::string::npos);
  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({"analyze", "--length", "40", "--no-such-flag"}).code == 2);
  CHECK(run({"analyze", "--length", "-3"}).code == 2);
  CHECK(run({"--help"}).code == 0);

  const auto missing = run({"train", "--dataset", "Nope", "--data-root", "/nonexistent"});
  CHECK(missing.code == 1);
  CHECK(missing.err.find("error:") == 0);
}

TEST_CASE("train, evaluate and report end to end") {
  const auto root = make_archive();
  const auto store = root / "runs.jsonl";
  const auto ckpt = root / "ckpt";
  const std::vector<std::string> train_args{"train", "--dataset", "Waves", "--data-root", root.string(), "--model",
                                            "os-cnn", "--seeds", "2", "--epochs", "3", "--budget", "2000",
                                            "--out", store.string(), "--checkpoint-dir", ckpt.string()};
  const auto first = run(train_args);
  REQUIRE(first.code == 0);
  const auto result = nlohmann::json::parse(first.out).get<RunResult>();
  CHECK(result.seeds == std::vector<std::uint64_t>{0, 1});
  CHECK(result.accuracies.size() == 2);
  CHECK(result.fingerprint.contains("train_config"));
  CHECK(result.fingerprint["batch_size"] == 2);

  // same seed, same accuracies
  const auto second = run(train_args);
  CHECK(nlohmann::json::parse(second.out).get<RunResult>().accuracies == result.accuracies);
  CHECK(read_jsonl(store).size() == 2);

  const auto c0 = (ckpt / "Waves_os-cnn_seed0.json").string();
  const auto c1 = (ckpt / "Waves_os-cnn_seed1.json").string();
  const auto single = run({"evaluate", "--dataset", "Waves", "--data-root", root.string(), "--checkpoint", c0});
  REQUIRE(single.code == 0);
  CHECK(nlohmann::json::parse(single.out)["accuracy"] == result.accuracies[0]);
  const auto ens =
      run({"evaluate", "--dataset", "Waves", "--data-root", root.string(), "--checkpoint", c0, "--checkpoint", c1});
  CHECK(ens.code == 0);
  CHECK(nlohmann::json::parse(ens.out)["members"] == 2);

  // runs store as an accuracy table next to a published CSV
  std::ofstream(root / "published.csv") << "dataset,FCN\nWaves,0.5\n";
  const auto wins = run({"report", "wins", "--runs", store.string(), "--csv", (root / "published.csv").string()});
  REQUIRE(wins.code == 0);
  const auto w = nlohmann::json::parse(wins.out);
  CHECK(w["a"] == "FCN");  // CSV inputs come before run stores
  CHECK(w["b"] == "os-cnn");
  CHECK(w["wins"].get<int>() + w["losses"].get<int>() + w["ties"].get<int>() == 1);

  // sharpshooter straight from run stores trained with --loo
  const auto loo_store = (root / "loo.jsonl").string();
  for (const std::string model : {"os-cnn", "fcn"})
    REQUIRE(run({"train", "--dataset", "Waves", "--data-root", root.string(), "--model", model, "--seeds", "1",
                 "--epochs", "2", "--budget", "2000", "--loo", "--out", loo_store})
                .code == 0);
  const auto loo_runs = read_jsonl(loo_store);
  REQUIRE(loo_runs.size() == 2);
  CHECK(loo_runs[0].loo_accuracies.size() == 1);
  const auto sharp =
      run({"report", "sharpshooter", "--runs", loo_store, "--candidate", "os-cnn", "--baseline", "fcn"});
  CHECK(sharp.code == 0);
  CHECK(sharp.out.find("Waves") != std::string::npos);
  CHECK(run({"report", "sharpshooter", "--candidate", "os-cnn", "--baseline", "fcn"}).code == 1);
  std::filesystem::remove_all(root);
}

TEST_CASE("report subcommands over CSV tables") {
  const auto root = std::filesystem::temp_directory_path() / "omniscale_cli_report";
  std::filesystem::create_directories(root);
  const auto a = (root / "a.csv").string();
  const auto b = (root / "b.csv").string();
  std::ofstream(a) << "dataset,A\nd1,0.9\nd2,0.8\nd3,0.7\nd4,0.6\nd5,0.123456789\n";
  std::ofstream(b) << "dataset,B\nd1,0.8\nd2,0.8\nd3,0.75\nd4,0.5\nd5,0.123456781\n";

  const auto wins = run({"report", "wins", "--csv", a, "--csv", b, "--pretty"});
  CHECK(wins.code == 0);
  CHECK(wins.out == "A vs B: 3/1/1 (wins/losses/ties)\n");

  const auto cd = run({"report", "cd", "--csv", a, "--csv", b});
  REQUIRE(cd.code == 0);
  const auto j = nlohmann::json::parse(cd.out);
  CHECK(j["ranks"]["A"] == doctest::Approx(1.3));
  CHECK(j.contains("cliques"));

  const auto rel = run({"report", "relative", "--csv", a, "--csv", b, "--candidate", "A", "--baseline", "B"});
  CHECK(rel.code == 0);
  CHECK(rel.out.find("B,d3,0.7,0.75,") != std::string::npos);

  const auto ranks = run({"report", "ranks", "--csv", a, "--csv", b});
  CHECK(nlohmann::json::parse(ranks.out)["average_ranks"]["B"] == doctest::Approx(1.7));

  CHECK(run({"report", "relative", "--csv", a, "--candidate", "A", "--baseline", "Z"}).code == 1);
  CHECK(run({"report", "wins"}).code == 1);
  std::filesystem::remove_all(root);
}

TEST_CASE("installed binary exit codes") {
  const char* cli = std::getenv("OMNISCALE_CLI");
  if (!cli) return;
  const std::string bin = std::string("\"") + cli + "\"";
  auto status = [](const std::string& cmd) {
    const int s = std::system((cmd + " >/dev/null 2>&1").c_str());
    return WIFEXITED(s) ? WEXITSTATUS(s) : -1;
  };
  CHECK(status(bin) == 2);
  CHECK(status(bin + " analyze --length 40") == 0);
  CHECK(status(bin + " analyze --length 40 --bogus") == 2);
  CHECK(status(bin + " train --dataset X --data-root /nonexistent") == 1);
}
