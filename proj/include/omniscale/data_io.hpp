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

#ifndef OMNISCALE_DATA_IO_HPP
#define OMNISCALE_DATA_IO_HPP

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "omniscale/tensor.hpp"

namespace omniscale {

enum class Split { kTrain, kTest, kUnspecified };

std::string to_string(Split split);

/// Labeled collection of (variates x length) series. Labels index into
/// class_names, the original label strings. Missing values are NaN.
struct TimeSeriesDataset {
  std::string name;
  Split split = Split::kUnspecified;
  std::vector<Eigen::MatrixXd> samples;
  std::vector<int> labels;
  std::vector<std::string> class_names;
  std::vector<Index> original_lengths;
  bool equal_length = true;
  std::string normalization = "none";

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  int n_classes() const { return static_cast<int>(class_names.size()); }
  int n_variates() const { return samples.empty() ? 0 : static_cast<int>(samples.front().rows()); }
  Index max_length() const;
  bool has_missing() const;

  // Checks the structural invariants; throws InvalidArgument.
  void validate() const;
};

struct ParseOptions {
  // Reject files whose series differ in length instead of flagging them.
  bool require_equal_length = false;
};

/// UCR archive format: one series per line, label then values, TAB
/// separated. "NaN" tokens are kept as missing values.
TimeSeriesDataset parse_ucr_tsv(const std::filesystem::path& path, const ParseOptions& options = {});
TimeSeriesDataset parse_ucr_tsv_text(std::string_view text, std::string name = {}, const ParseOptions& options = {});

/// UEA/sktime `.ts` format: @-directives up to @data, then one sample per
/// line, dimensions separated by ':', values by ',', label last. '?' marks a
/// missing value. Timestamped and sparse variants are rejected.
TimeSeriesDataset parse_uea_ts(const std::filesystem::path& path);
TimeSeriesDataset parse_uea_ts_text(std::string_view text, std::string name = {});

// Dispatches on the file extension (.ts or anything else as UCR tsv).
TimeSeriesDataset parse_dataset_file(const std::filesystem::path& path, const ParseOptions& options = {});

std::string write_ucr_tsv(const TimeSeriesDataset& dataset);
std::string write_uea_ts(const TimeSeriesDataset& dataset);
nlohmann::json dataset_json(const TimeSeriesDataset& dataset);

/// Zero mean, unit population standard deviation. Constant or length < 2
/// series map to zeros. NaN entries are ignored and left in place.
Eigen::VectorXd znormalize(const Eigen::VectorXd& series);
TimeSeriesDataset znormalize(TimeSeriesDataset dataset);

/// Right zero-padding to the longest series; original_lengths keeps the
/// unpadded lengths.
TimeSeriesDataset pad_to_max(TimeSeriesDataset dataset);

/// Linear interpolation of NaN runs; edges take the nearest observed value
/// and all-missing series become zeros.
TimeSeriesDataset interpolate_missing(TimeSeriesDataset dataset);

/// Train/test pair sharing one label map.
struct DatasetPair {
  TimeSeriesDataset train;
  TimeSeriesDataset test;
};

/// Rewrites both label maps to the sorted union of their class names
/// (numeric labels sort numerically).
void align_label_maps(TimeSeriesDataset& train, TimeSeriesDataset& test);

inline constexpr const char* kDataRootEnv = "OMNISCALE_DATA_ROOT";

/// Resolves NAME to its train/test files. A manifest (JSON
/// {"datasets": {NAME: {"train": path, "test": path}}}, paths relative to
/// the manifest) wins; otherwise the archive layout
/// <root>/NAME/NAME_TRAIN.{tsv,ts} is searched under data_root or
/// $OMNISCALE_DATA_ROOT.
struct DatasetLocation {
  std::filesystem::path train;
  std::filesystem::path test;
};

DatasetLocation locate_dataset(const std::string& name, const std::optional<std::filesystem::path>& manifest,
                               const std::optional<std::filesystem::path>& data_root);
DatasetPair load_dataset_pair(const DatasetLocation& location, const std::string& name,
                              const ParseOptions& options = {});

/// Stacks the selected samples into a (batch, variates, length) tensor.
/// Requires equal lengths and no missing values.
Tensor to_tensor(const TimeSeriesDataset& dataset, std::span<const std::size_t> indices);
Tensor to_tensor(const TimeSeriesDataset& dataset);

}  // namespace omniscale

#endif  // OMNISCALE_DATA_IO_HPP
