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

#include <filesystem>
#include <random>

#include "doctest.h"
#include "omniscale/checkpoint.hpp"
#include "omniscale/models.hpp"
#include "oracles.hpp"

using namespace omniscale;

namespace {

ModelSpec os_spec(std::int64_t length, int classes = 2, int variates = 1) {
  ModelSpec spec;
  spec.series_length = length;
  spec.n_classes = classes;
  spec.n_variates = variates;
  return spec;
}

std::int64_t analytic_weights(const Model& model) {
  std::int64_t total = 0;
  for (const auto& s : model.block_specs()) total += count_block_weights(s).total_weights;
  return total + model.head_weight_count();
}

void zero_block(ConvBlock& block) {
  for (auto& layer : block.layers)
    for (auto& w : layer.weights) w.value.array().setZero();
}

}  // namespace

TEST_CASE("OS-CNN shape contracts") {
  Model m = build_os_cnn(os_spec(10), 1);
  std::mt19937_64 rng(1);
  Tape tape;
  CHECK(m.forward(tape, oracle::random_tensor({2, 1, 10}, rng), Mode::kTrain).value().shape() == Shape{2, 2});
  CHECK(m.block_specs().front().layer_kernel_lists == std::vector<KernelList>{{1, 2, 3}, {1, 2, 3}, {1, 2}});
  CHECK_NOTHROW(m.block_specs().front().validate_canonical());

  Model multi = build_os_cnn(os_spec(10, 3, 3), 1);
  CHECK(multi.blocks().front().layers.front().weights.front().value.dim(1) == 3);
  Tape t2;
  CHECK(multi.forward(t2, oracle::random_tensor({4, 3, 10}, rng), Mode::kEval).value().shape() == Shape{4, 3});

  CHECK_THROWS_AS(build_os_cnn(os_spec(10, 1), 1), InvalidArgument);
  Tape t3;
  CHECK_THROWS_AS(m.forward(t3, oracle::random_tensor({2, 2, 10}, rng), Mode::kEval), InvalidArgument);
}

TEST_CASE("weight counts equal the analytic block cost plus head") {
  std::vector<Model> models;
  models.push_back(build_os_cnn(os_spec(10), 1));
  models.push_back(build_os_cnn(os_spec(64, 4, 2), 2));
  models.push_back(build_os_cnn_res(2, os_spec(30), 3));
  models.push_back(build_os_cnn_res(3, os_spec(100, 5), 4));
  models.push_back(build_mos_cnn(os_spec(20, 3, 2), 5));
  for (const auto& m : models) {
    CHECK(m.weight_count() == analytic_weights(m));
    CHECK(m.conv_weight_count() <= kFcnReferenceWeights);
  }
}

TEST_CASE("default budget matching against the reference FCN") {
  for (std::int64_t n : {10, 40, 128, 500}) {
    const ModelSpec spec = os_spec(n);
    const Model m = build_os_cnn(spec, 1);
    const int c = *m.spec().branch_channels;
    const auto lists = m.block_specs().front().layer_kernel_lists;
    CHECK(oracle::enumerate_weights(lists, 1, c) == m.conv_weight_count());
    CHECK(m.conv_weight_count() <= kFcnReferenceWeights);
    CHECK(oracle::enumerate_weights(lists, 1, c + 1) > kFcnReferenceWeights);
  }
}

TEST_CASE("receptive field reaches half the series") {
  for (std::int64_t n : {2, 10, 33, 100, 257}) {
    const Model m = build_os_cnn(os_spec(n), 1);
    CHECK(m.max_receptive_field() >= (n + 1) / 2);
  }
  ModelSpec spec = os_spec(100);
  spec.rf_override = 12;
  CHECK(build_os_cnn(spec, 1).block_specs().front().layer_kernel_lists.front().back() == select_max_prime_for_rf(12));
}

TEST_CASE("OS-CNN-RES") {
  ModelSpec spec = os_spec(20);
  spec.branch_channels = 2;
  std::mt19937_64 rng(2);
  const Tensor x = oracle::random_tensor({3, 1, 20}, rng);

  // Depth 1 is the plain OS-CNN.
  Model plain = build_os_cnn(spec, 7);
  Model res1 = build_os_cnn_res(1, spec, 7);
  {
    Tape a, b;
    CHECK((plain.forward(a, x, Mode::kTrain).value().array() == res1.forward(b, x, Mode::kTrain).value().array()).all());
  }

  // Depth 2 with the second block zeroed reduces to the identity skip over block 1.
  Model res2 = build_os_cnn_res(2, spec, 7);
  CHECK(res2.blocks().size() == 2);
  CHECK(res2.blocks()[1].residual);
  CHECK(res2.blocks()[1].in_channels() == res2.blocks()[1].out_channels());
  zero_block(res2.mutable_blocks()[1]);
  Model fresh = build_os_cnn(spec, 7);
  for (Mode mode : {Mode::kTrain, Mode::kEval}) {
    Tape a, b;
    const Tensor& f1 = fresh.features(a, a.constant(x), mode).value();
    const Tensor& f2 = res2.features(b, b.constant(x), mode).value();
    REQUIRE(f1.shape() == f2.shape());
    CHECK(((f1.array() - f2.array()).abs() <= 1e-12).all());
  }

  CHECK_NOTHROW(build_os_cnn_res(3, os_spec(100), 1));
  CHECK_THROWS_AS(build_os_cnn_res(4, os_spec(100), 1), InvalidArgument);
}

TEST_CASE("residual projection when channel counts differ") {
  std::mt19937_64 rng(3);
  ModelSpec spec = os_spec(12, 2, 3);
  ConvBlock block = make_conv_block({{1, 2, 3}, {1, 2, 3}, {1, 2}}, 3, 1, true, "block0", 5);
  REQUIRE(block.projection.has_value());
  CHECK(block.projection->value.shape() == Shape{2, 3, 1});
  zero_block(block);
  const Tensor proj = block.projection->value;
  Model m(spec, {}, {std::move(block)}, 2, 1);
  CHECK(m.conv_weight_count() == 1 * 3 * 6 + 3 * 1 * 6 + 3 * 1 * 3 + 2 * 3);

  const Tensor x = oracle::random_tensor({2, 3, 12}, rng);
  Tape tape;
  const Tensor& f = m.features(tape, tape.constant(x), Mode::kTrain).value();
  for (Index b = 0; b < 2; ++b) {
    const RowMatrix<double> expected =
        (Eigen::Map<const RowMatrix<double>>(proj.data(), 2, 3) * x.sample(b)).cwiseMax(0.0);
    CHECK(((f.sample(b) - expected).array().abs() <= 1e-12).all());
  }
}

TEST_CASE("MOS-CNN") {
  ModelSpec spec = os_spec(12, 3, 2);
  spec.branch_channels = 2;
  Model m = build_mos_cnn(spec, 4);
  REQUIRE(m.variate_blocks().size() == 2);
  CHECK(m.variate_blocks()[0].out_channels() == 4);
  CHECK(m.blocks().front().in_channels() == 2 * 2 * 2);

  std::mt19937_64 rng(4);
  Tensor x = oracle::random_tensor({3, 2, 12}, rng);
  Tape t0;
  CHECK(m.forward(t0, x, Mode::kTrain).value().shape() == Shape{3, 3});

  zero_block(m.mutable_variate_blocks()[1]);
  Tensor x2 = x;
  for (Index b = 0; b < 3; ++b) x2.sample(b).row(1).setRandom();
  for (Mode mode : {Mode::kTrain, Mode::kEval}) {
    Tape a, b;
    CHECK((m.forward(a, x, mode).value().array() == m.forward(b, x2, mode).value().array()).all());
  }

  CHECK_THROWS_AS(build_mos_cnn(os_spec(12, 2, 1), 1), InvalidArgument);
}

TEST_CASE("zero input gives a uniform softmax") {
  for (int classes : {2, 3, 7}) {
    for (Model m : {build_os_cnn(os_spec(16, classes), 1), build_os_cnn_res(2, os_spec(16, classes), 2)}) {
      const Tensor p = m.predict_proba(Tensor({2, 1, 16}));
      CHECK(((p.array() - 1.0 / classes).abs() <= 1e-12).all());
    }
  }
}

TEST_CASE("FCN baselines") {
  const FcnGeometry ref = fcn_geometry(1.0, FcnMode::kReference);
  CHECK(fcn_conv_weights(ref) == 263168);
  CHECK(1 * 128 * 8 + 128 * 256 * 5 + 256 * 128 * 3 == 263168);

  const FcnGeometry twice = fcn_geometry(2.0, FcnMode::kFixedChannels);
  CHECK(twice.kernels == std::array<int, 3>{16, 10, 6});
  CHECK(std::abs(static_cast<double>(fcn_conv_weights(twice)) / (2.0 * 263168) - 1.0) <= 0.02);

  for (double scale : {0.75, 1.5, 2.0, 4.0, 12.625}) {
    const FcnGeometry fixed = fcn_geometry(scale, FcnMode::kFixedSize);
    CHECK(std::abs(static_cast<double>(fcn_conv_weights(fixed)) / 263168.0 - 1.0) <= 0.02);
  }
  CHECK_THROWS_AS(fcn_geometry(0.05, FcnMode::kFixedChannels), InvalidArgument);

  ModelSpec spec = os_spec(32);
  spec.kind = ModelKind::kFcn;
  Model fcn = build_fcn_baseline(1.0, FcnMode::kReference, spec, 1);
  CHECK(fcn.conv_weight_count() == 263168);
  CHECK(fcn.weight_count() == 263168 + 2 * 128);
  CHECK(fcn.max_receptive_field() == 14);
  Model scaled = build_fcn_baseline(2.0, FcnMode::kFixedSize, spec, 1);
  CHECK(std::abs(static_cast<double>(scaled.conv_weight_count()) / 263168.0 - 1.0) <= 0.02);
}

TEST_CASE("gradient check over a whole OS-CNN") {
  std::mt19937_64 rng(5);
  ModelSpec spec = os_spec(10, 3);
  spec.branch_channels = 1;
  Model m = build_os_cnn(spec, 9);
  const Tensor x = oracle::random_tensor({4, 1, 10}, rng);
  CHECK(oracle::model_gradient_check(m, x, {0, 1, 2, 1}) < 1e-4);

  ModelSpec r = os_spec(8, 2);
  r.branch_channels = 1;
  Model res = build_os_cnn_res(2, r, 3);
  CHECK(oracle::model_gradient_check(res, oracle::random_tensor({3, 1, 8}, rng), {0, 1, 1}) < 1e-4);

  ModelSpec mv = os_spec(6, 2, 2);
  mv.branch_channels = 1;
  Model mos = build_mos_cnn(mv, 3);
  CHECK(oracle::model_gradient_check(mos, oracle::random_tensor({3, 2, 6}, rng), {1, 0, 1}) < 1e-4);
}

TEST_CASE("ensembles") {
  const Tensor a = Tensor::from_values({1, 2}, {0.2, 0.8});
  const Tensor b = Tensor::from_values({1, 2}, {0.6, 0.4});
  const Tensor mean = ensemble_mean(std::vector<Tensor>{a, b});
  CHECK(mean(0, 0) == doctest::Approx(0.4));
  CHECK(mean(0, 1) == doctest::Approx(0.6));
  CHECK_THROWS_AS(ensemble_mean(std::vector<Tensor>{a, Tensor({1, 3})}), InvalidArgument);
  CHECK_THROWS_AS(ensemble_mean(std::vector<Tensor>{}), InvalidArgument);

  std::mt19937_64 rng(6);
  const Tensor x = oracle::random_tensor({3, 1, 12}, rng);
  Model single = build_os_cnn(os_spec(12, 3), 1);
  Model* one[] = {&single};
  CHECK((ensemble_predict(one, x).array() == single.predict_proba(x).array()).all());

  ModelSpec uspec = os_spec(12, 3);
  uspec.branch_channels = 1;
  auto uos = build_uos_cnn(uspec, 10);
  REQUIRE(uos.size() == 5);
  std::vector<Model*> members;
  for (auto& m : uos) {
    CHECK(m.spec().kind == ModelKind::kOsCnnRes);
    CHECK(m.spec().depth == 2);
    members.push_back(&m);
  }
  const Tensor p = ensemble_predict(members, x);
  for (Index r = 0; r < 3; ++r) CHECK(std::abs(p.matrix().row(r).sum() - 1.0) <= 1e-12);
  CHECK(argmax_rows(Tensor::from_values({2, 3}, {0.1, 0.7, 0.2, 0.5, 0.2, 0.3})) == std::vector<int>{1, 0});

  Model other = build_os_cnn(os_spec(12, 2), 1);
  Model* mixed[] = {&single, &other};
  CHECK_THROWS_AS(ensemble_predict(mixed, x), InvalidArgument);
}

TEST_CASE("model spec parsing and json") {
  CHECK(parse_model_kind("os-cnn").kind == ModelKind::kOsCnn);
  CHECK(parse_model_kind("os-cnn-res:3").depth == 3);
  CHECK(parse_model_kind("mos-cnn").kind == ModelKind::kMosCnn);
  CHECK(parse_model_kind("fcn").kind == ModelKind::kFcn);
  CHECK_THROWS_AS(parse_model_kind("os-cnn-res:x"), InvalidArgument);
  CHECK_THROWS_AS(parse_model_kind("lstm"), InvalidArgument);

  ModelSpec spec = parse_model_kind("os-cnn-res:2");
  spec.series_length = 50;
  spec.rf_override = 9;
  spec.n_classes = 4;
  nlohmann::json j = spec;
  const ModelSpec back = j.get<ModelSpec>();
  CHECK(back.kind == spec.kind);
  CHECK(back.depth == 2);
  CHECK(back.rf_override == spec.rf_override);
  CHECK(back.n_classes == 4);
}

TEST_CASE("checkpoint round trip is bit-exact") {
  ModelSpec spec = os_spec(16, 3);
  spec.branch_channels = 2;
  Model m = build_os_cnn_res(2, spec, 12);
  std::mt19937_64 rng(7);
  const Tensor x = oracle::random_tensor({4, 1, 16}, rng);
  {
    Tape tape;  // move the running statistics away from their defaults
    m.forward(tape, x, Mode::kTrain);
  }
  const auto path = std::filesystem::temp_directory_path() / "omniscale_ckpt_test.json";
  save_checkpoint(m, path);
  Model back = load_checkpoint(path);
  std::filesystem::remove(path);
  const auto s1 = m.state();
  const auto s2 = back.state();
  REQUIRE(s1.size() == s2.size());
  for (std::size_t i = 0; i < s1.size(); ++i) {
    CHECK(s1[i].first == s2[i].first);
    CHECK((s1[i].second.array() == s2[i].second.array()).all());
  }
  CHECK((m.predict_proba(x).array() == back.predict_proba(x).array()).all());
}
