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

#ifndef OMNISCALE_CHECKPOINT_HPP
#define OMNISCALE_CHECKPOINT_HPP

#include <filesystem>

#include <nlohmann/json.hpp>

#include "omniscale/models.hpp"

namespace omniscale {

inline constexpr int kCheckpointVersion = 1;

/// Checkpoint document:
///
///   {"format": "omniscale-checkpoint", "version": 1,
///    "model": <ModelSpec>, "seed": <uint>,
///    "tensors": [{"name": str, "shape": [int...], "values": [double...]}, ...]}
///
/// Values are row-major and written with round-trip precision, so a save and
/// load reproduces every tensor bit-exactly.
nlohmann::json checkpoint_json(const Model& model);

// Rebuilds the architecture from the embedded spec, then loads every tensor.
Model model_from_checkpoint(const nlohmann::json& doc);

void save_checkpoint(const Model& model, const std::filesystem::path& path);
Model load_checkpoint(const std::filesystem::path& path);

}  // namespace omniscale

#endif  // OMNISCALE_CHECKPOINT_HPP
