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

#include "omniscale/checkpoint.hpp"

#include <fstream>

namespace omniscale {

nlohmann::json checkpoint_json(const Model& model) {
  nlohmann::json doc{{"format", "omniscale-checkpoint"}, {"version", kCheckpointVersion}};
  doc["model"] = model.spec();
  doc["seed"] = model.seed();
  auto& tensors = doc["tensors"] = nlohmann::json::array();
  for (const auto& [name, t] : model.state()) {
    tensors.push_back({{"name", name},
                       {"shape", t.shape()},
                       {"values", std::vector<double>(t.data(), t.data() + t.size())}});
  }
  return doc;
}

Model model_from_checkpoint(const nlohmann::json& doc) {
  if (doc.value("format", std::string()) != "omniscale-checkpoint")
    throw InvalidArgument("not an omniscale checkpoint");
  if (doc.value("version", 0) != kCheckpointVersion)
    throw InvalidArgument("unsupported checkpoint version " + doc.value("version", nlohmann::json()).dump());
  Model model = build_model(doc.at("model").get<ModelSpec>(), doc.at("seed").get<std::uint64_t>());
  std::vector<std::pair<std::string, Tensor>> named;
  for (const auto& entry : doc.at("tensors")) {
    const auto shape = entry.at("shape").get<Shape>();
    const auto values = entry.at("values").get<std::vector<double>>();
    named.emplace_back(entry.at("name").get<std::string>(),
                       Tensor(shape, Eigen::Map<const Eigen::ArrayXd>(values.data(), static_cast<Index>(values.size()))));
  }
  model.load_state(named);
  return model;
}

void save_checkpoint(const Model& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out << checkpoint_json(model).dump() << '\n';
}

Model load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read checkpoint " + path.string());
  return model_from_checkpoint(nlohmann::json::parse(in));
}

}  // namespace omniscale
