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

#include "omniscale/data_io.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "omniscale/errors.hpp"

namespace omniscale {

namespace {

constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::vector<std::string_view> lines_of(std::string_view text) {
  auto lines = split(text, '\n');
  for (auto& l : lines)
    if (!l.empty() && l.back() == '\r') l.remove_suffix(1);
  return lines;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

std::optional<double> to_double(std::string_view token) {
  token = trim(token);
  if (token.empty()) return std::nullopt;
  if (token.front() == '+') token.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size()) return std::nullopt;
  return value;
}

double parse_value(std::string_view token, std::size_t line) {
  const std::string_view t = trim(token);
  if (t == "?" || lower(t) == "nan") return kMissing;
  const auto v = to_double(t);
  if (!v) throw ParseError("non-numeric value '" + std::string(t) + "'", line);
  return *v;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "NaN";
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

// Numeric labels compare by value ("1.0" and "1" are the same class).
std::string canonical_label(std::string_view raw) {
  const auto t = trim(raw);
  if (const auto v = to_double(t); v && std::isfinite(*v)) return format_double(*v);
  return std::string(t);
}

std::vector<std::string> sorted_labels(const std::set<std::string>& labels) {
  std::vector<std::string> out(labels.begin(), labels.end());
  const bool numeric = std::all_of(out.begin(), out.end(), [](const std::string& s) { return to_double(s).has_value(); });
  if (numeric)
    std::sort(out.begin(), out.end(), [](const std::string& a, const std::string& b) { return *to_double(a) < *to_double(b); });
  return out;
}

void assign_labels(TimeSeriesDataset& ds, const std::vector<std::string>& raw, std::vector<std::string> class_names) {
  std::map<std::string, int> index;
  for (std::size_t i = 0; i < class_names.size(); ++i) index[class_names[i]] = static_cast<int>(i);
  ds.labels.clear();
  for (const auto& r : raw) ds.labels.push_back(index.at(r));
  ds.class_names = std::move(class_names);
}

void finish_lengths(TimeSeriesDataset& ds) {
  ds.original_lengths.clear();
  for (const auto& s : ds.samples) ds.original_lengths.push_back(s.cols());
  ds.equal_length = std::adjacent_find(ds.original_lengths.begin(), ds.original_lengths.end(),
                                       std::not_equal_to<>()) == ds.original_lengths.end();
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

std::string to_string(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kTest: return "test";
    case Split::kUnspecified: return "unspecified";
  }
  return "unspecified";
}

Index TimeSeriesDataset::max_length() const {
  Index m = 0;
  for (const auto& s : samples) m = std::max(m, s.cols());
  return m;
}

bool TimeSeriesDataset::has_missing() const {
  return std::any_of(samples.begin(), samples.end(), [](const Eigen::MatrixXd& s) { return s.hasNaN(); });
}

void TimeSeriesDataset::validate() const {
  if (labels.size() != samples.size()) throw InvalidArgument("dataset label count differs from sample count");
  for (const auto& s : samples)
    if (s.rows() != n_variates()) throw InvalidArgument("dataset samples disagree on variate count");
  for (int y : labels)
    if (y < 0 || y >= n_classes()) throw InvalidArgument("dataset label outside [0, n_classes)");
  if (std::set<std::string>(class_names.begin(), class_names.end()).size() != class_names.size())
    throw InvalidArgument("dataset label map is not a bijection");
}

TimeSeriesDataset parse_ucr_tsv_text(std::string_view text, std::string name, const ParseOptions& options) {
  TimeSeriesDataset ds;
  ds.name = std::move(name);
  std::vector<std::string> raw_labels;
  std::size_t line_no = 0;
  std::optional<Index> first_length;
  for (std::string_view line : lines_of(text)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const char sep = line.find('\t') != std::string_view::npos ? '\t' : ',';
    auto tokens = split(line, sep);
    while (!tokens.empty() && trim(tokens.back()).empty()) tokens.pop_back();
    if (tokens.size() < 2) throw ParseError("expected a label followed by values", line_no);
    raw_labels.push_back(canonical_label(tokens.front()));
    Eigen::MatrixXd series(1, static_cast<Index>(tokens.size() - 1));
    for (std::size_t i = 1; i < tokens.size(); ++i) series(0, static_cast<Index>(i - 1)) = parse_value(tokens[i], line_no);
    if (!first_length) first_length = series.cols();
    if (options.require_equal_length && series.cols() != *first_length)
      throw ParseError("ragged series: length " + std::to_string(series.cols()) + ", expected " +
                           std::to_string(*first_length),
                       line_no);
    ds.samples.push_back(std::move(series));
  }
  if (ds.samples.empty()) throw EmptyDataset("dataset '" + ds.name + "' has no series");
  assign_labels(ds, raw_labels, sorted_labels({raw_labels.begin(), raw_labels.end()}));
  finish_lengths(ds);
  return ds;
}

TimeSeriesDataset parse_ucr_tsv(const std::filesystem::path& path, const ParseOptions& options) {
  return parse_ucr_tsv_text(read_file(path), path.stem().string(), options);
}

TimeSeriesDataset parse_uea_ts_text(std::string_view text, std::string name) {
  TimeSeriesDataset ds;
  ds.name = std::move(name);
  std::optional<bool> univariate;
  std::optional<int> dimensions;
  std::optional<std::vector<std::string>> declared;
  bool in_data = false;
  std::vector<std::string> raw_labels;
  std::size_t line_no = 0;

  for (std::string_view raw_line : lines_of(text)) {
    ++line_no;
    const std::string_view line = trim(raw_line);
    if (line.empty() || line.front() == '#') continue;

    if (!in_data) {
      if (line.front() != '@') throw ParseError("data line before @data", line_no);
      std::istringstream words{std::string(line)};
      std::string key;
      words >> key;
      key = lower(key);
      std::string value;
      if (key == "@data") {
        in_data = true;
      } else if (key == "@problemname") {
        words >> value;
        if (ds.name.empty()) ds.name = value;
      } else if (key == "@timestamps") {
        words >> value;
        if (lower(value) == "true") throw ParseError("timestamped .ts files are not supported", line_no);
      } else if (key == "@univariate") {
        words >> value;
        univariate = lower(value) == "true";
      } else if (key == "@dimensions" || key == "@dimension") {
        int d = 0;
        if (!(words >> d) || d < 1) throw ParseError("bad @dimensions value", line_no);
        dimensions = d;
      } else if (key == "@classlabel") {
        words >> value;
        if (lower(value) != "true") throw ParseError("only classification .ts files are supported", line_no);
        std::vector<std::string> labels;
        while (words >> value) labels.push_back(value);
        if (labels.empty()) throw ParseError("@classLabel true without labels", line_no);
        declared = std::move(labels);
      } else if (key == "@targetlabel") {
        throw ParseError("regression .ts files are not supported", line_no);
      }
      // Other directives (@missing, @equalLength, @seriesLength, ...) are informational.
      continue;
    }

    if (line.find('(') != std::string_view::npos)
      throw ParseError("sparse/timestamped series values are not supported", line_no);
    const auto parts = split(line, ':');
    if (parts.size() < 2) throw ParseError("expected dimensions followed by ':label'", line_no);
    const std::string label(trim(parts.back()));
    if (declared && std::find(declared->begin(), declared->end(), label) == declared->end())
      throw ParseError("unknown label '" + label + "'", line_no);
    const std::size_t dims = parts.size() - 1;
    if (!ds.samples.empty() && static_cast<Index>(dims) != ds.samples.front().rows())
      throw ParseError("dimension count " + std::to_string(dims) + " differs from earlier samples (" +
                           std::to_string(ds.samples.front().rows()) + ")",
                       line_no);
    if (univariate && *univariate && dims != 1) throw ParseError("@univariate true but sample has several dimensions", line_no);
    if (dimensions && static_cast<int>(dims) != *dimensions)
      throw ParseError("sample has " + std::to_string(dims) + " dimensions, header declares " + std::to_string(*dimensions),
                       line_no);

    std::vector<std::vector<double>> rows(dims);
    for (std::size_t d = 0; d < dims; ++d) {
      for (std::string_view token : split(parts[d], ',')) rows[d].push_back(parse_value(token, line_no));
      if (rows[d].size() != rows[0].size())
        throw ParseError("dimensions of one sample differ in length", line_no);
    }
    Eigen::MatrixXd sample(static_cast<Index>(dims), static_cast<Index>(rows[0].size()));
    for (std::size_t d = 0; d < dims; ++d)
      for (std::size_t t = 0; t < rows[d].size(); ++t) sample(static_cast<Index>(d), static_cast<Index>(t)) = rows[d][t];
    ds.samples.push_back(std::move(sample));
    raw_labels.push_back(label);
  }
  if (!in_data) throw ParseError("missing @data directive");
  if (ds.samples.empty()) throw EmptyDataset("dataset '" + ds.name + "' has no series");
  assign_labels(ds, raw_labels, declared ? *declared : sorted_labels({raw_labels.begin(), raw_labels.end()}));
  finish_lengths(ds);
  return ds;
}

TimeSeriesDataset parse_uea_ts(const std::filesystem::path& path) {
  auto ds = parse_uea_ts_text(read_file(path));
  if (ds.name.empty()) ds.name = path.stem().string();
  return ds;
}

TimeSeriesDataset parse_dataset_file(const std::filesystem::path& path, const ParseOptions& options) {
  return path.extension() == ".ts" ? parse_uea_ts(path) : parse_ucr_tsv(path, options);
}

std::string write_ucr_tsv(const TimeSeriesDataset& dataset) {
  if (dataset.n_variates() > 1) throw InvalidArgument("UCR tsv holds univariate data only");
  std::string out;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    out += dataset.class_names.at(static_cast<std::size_t>(dataset.labels[i]));
    const auto& s = dataset.samples[i];
    for (Index t = 0; t < s.cols(); ++t) out += '\t' + format_double(s(0, t));
    out += '\n';
  }
  return out;
}

std::string write_uea_ts(const TimeSeriesDataset& dataset) {
  std::string out = "@problemName " + (dataset.name.empty() ? std::string("unnamed") : dataset.name) + "\n";
  out += "@timeStamps false\n@missing " + std::string(dataset.has_missing() ? "true" : "false") + "\n";
  out += "@univariate " + std::string(dataset.n_variates() == 1 ? "true" : "false") + "\n";
  out += "@dimensions " + std::to_string(dataset.n_variates()) + "\n";
  out += "@equalLength " + std::string(dataset.equal_length ? "true" : "false") + "\n";
  out += "@classLabel true";
  for (const auto& c : dataset.class_names) out += " " + c;
  out += "\n@data\n";
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& s = dataset.samples[i];
    for (Index d = 0; d < s.rows(); ++d) {
      for (Index t = 0; t < s.cols(); ++t) {
        if (t) out += ',';
        out += std::isnan(s(d, t)) ? "?" : format_double(s(d, t));
      }
      out += ':';
    }
    out += dataset.class_names.at(static_cast<std::size_t>(dataset.labels[i])) + "\n";
  }
  return out;
}

nlohmann::json dataset_json(const TimeSeriesDataset& dataset) {
  nlohmann::json j{{"name", dataset.name},
                   {"split", to_string(dataset.split)},
                   {"class_names", dataset.class_names},
                   {"labels", dataset.labels},
                   {"equal_length", dataset.equal_length},
                   {"original_lengths", dataset.original_lengths},
                   {"normalization", dataset.normalization}};
  auto& samples = j["samples"] = nlohmann::json::array();
  for (const auto& s : dataset.samples) {
    nlohmann::json rows = nlohmann::json::array();
    for (Index d = 0; d < s.rows(); ++d) {
      nlohmann::json row = nlohmann::json::array();
      // JSON has no NaN; missing values become null.
      for (Index t = 0; t < s.cols(); ++t) row.push_back(std::isnan(s(d, t)) ? nlohmann::json(nullptr) : nlohmann::json(s(d, t)));
      rows.push_back(std::move(row));
    }
    samples.push_back(std::move(rows));
  }
  return j;
}

Eigen::VectorXd znormalize(const Eigen::VectorXd& series) {
  const Eigen::Array<bool, Eigen::Dynamic, 1> observed = series.array().isFinite();
  const Index n = observed.count();
  Eigen::VectorXd out = series;
  if (n < 2) return observed.select(Eigen::VectorXd::Zero(series.size()), series);
  const double mean = observed.select(series.array(), 0.0).sum() / static_cast<double>(n);
  const double var = observed.select((series.array() - mean).square(), 0.0).sum() / static_cast<double>(n);
  if (!(var > 0.0)) return observed.select(Eigen::VectorXd::Zero(series.size()), series);
  const double std_dev = std::sqrt(var);
  for (Index i = 0; i < series.size(); ++i)
    if (observed[i]) out[i] = (series[i] - mean) / std_dev;
  return out;
}

TimeSeriesDataset znormalize(TimeSeriesDataset dataset) {
  for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
    auto& s = dataset.samples[i];
    // Padding is not part of the series.
    const Index len = i < dataset.original_lengths.size() ? std::min(dataset.original_lengths[i], s.cols()) : s.cols();
    for (Index d = 0; d < s.rows(); ++d)
      s.row(d).head(len) = znormalize(Eigen::VectorXd(s.row(d).head(len).transpose())).transpose();
  }
  dataset.normalization = "znorm(population std)";
  return dataset;
}

TimeSeriesDataset pad_to_max(TimeSeriesDataset dataset) {
  const Index target = dataset.max_length();
  if (dataset.original_lengths.size() != dataset.samples.size()) finish_lengths(dataset);
  for (auto& s : dataset.samples) {
    if (s.cols() == target) continue;
    Eigen::MatrixXd padded = Eigen::MatrixXd::Zero(s.rows(), target);
    padded.leftCols(s.cols()) = s;
    s = std::move(padded);
  }
  dataset.equal_length = true;
  return dataset;
}

TimeSeriesDataset interpolate_missing(TimeSeriesDataset dataset) {
  for (auto& s : dataset.samples) {
    for (Index d = 0; d < s.rows(); ++d) {
      auto row = s.row(d);
      std::vector<Index> known;
      for (Index t = 0; t < row.size(); ++t)
        if (!std::isnan(row[t])) known.push_back(t);
      if (known.empty()) {
        row.setZero();
        continue;
      }
      for (Index t = 0; t < known.front(); ++t) row[t] = row[known.front()];
      for (Index t = known.back() + 1; t < row.size(); ++t) row[t] = row[known.back()];
      for (std::size_t k = 0; k + 1 < known.size(); ++k) {
        const Index a = known[k], b = known[k + 1];
        for (Index t = a + 1; t < b; ++t)
          row[t] = row[a] + (row[b] - row[a]) * static_cast<double>(t - a) / static_cast<double>(b - a);
      }
    }
  }
  return dataset;
}

void align_label_maps(TimeSeriesDataset& train, TimeSeriesDataset& test) {
  std::set<std::string> all(train.class_names.begin(), train.class_names.end());
  all.insert(test.class_names.begin(), test.class_names.end());
  // Keep a declared order when both splits share it.
  std::vector<std::string> names = train.class_names == test.class_names ? train.class_names : sorted_labels(all);
  for (TimeSeriesDataset* ds : {&train, &test}) {
    std::vector<std::string> raw;
    for (int y : ds->labels) raw.push_back(ds->class_names.at(static_cast<std::size_t>(y)));
    assign_labels(*ds, raw, names);
  }
}

DatasetLocation locate_dataset(const std::string& name, const std::optional<std::filesystem::path>& manifest,
                               const std::optional<std::filesystem::path>& data_root) {
  namespace fs = std::filesystem;
  if (manifest) {
    std::ifstream in(*manifest);
    if (!in) throw ParseError("cannot open manifest " + manifest->string());
    const auto doc = nlohmann::json::parse(in);
    const auto& entries = doc.at("datasets");
    if (!entries.contains(name)) throw InvalidArgument("dataset '" + name + "' is not in manifest " + manifest->string());
    const fs::path base = manifest->parent_path();
    auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };
    return {resolve(entries[name].at("train").get<std::string>()), resolve(entries[name].at("test").get<std::string>())};
  }
  fs::path root;
  if (data_root) {
    root = *data_root;
  } else if (const char* env = std::getenv(kDataRootEnv); env && *env) {
    root = env;
  } else {
    throw InvalidArgument("no data root: pass --data-root, --manifest or set " + std::string(kDataRootEnv));
  }
  for (const char* ext : {".tsv", ".ts", ".txt"}) {
    const fs::path train = root / name / (name + "_TRAIN" + ext);
    const fs::path test = root / name / (name + "_TEST" + ext);
    if (fs::exists(train) && fs::exists(test)) return {train, test};
  }
  throw InvalidArgument("dataset '" + name + "' not found under " + root.string());
}

DatasetPair load_dataset_pair(const DatasetLocation& location, const std::string& name, const ParseOptions& options) {
  DatasetPair pair{parse_dataset_file(location.train, options), parse_dataset_file(location.test, options)};
  pair.train.name = pair.test.name = name;
  pair.train.split = Split::kTrain;
  pair.test.split = Split::kTest;
  if (pair.train.n_variates() != pair.test.n_variates())
    throw ParseError("train and test splits of '" + name + "' disagree on variate count");
  align_label_maps(pair.train, pair.test);
  return pair;
}

Tensor to_tensor(const TimeSeriesDataset& dataset, std::span<const std::size_t> indices) {
  if (indices.empty()) throw InvalidArgument("to_tensor: no samples selected");
  const Index variates = dataset.n_variates();
  const Index length = dataset.samples.at(indices.front()).cols();
  Tensor t({static_cast<Index>(indices.size()), variates, length});
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto& s = dataset.samples.at(indices[i]);
    if (s.cols() != length) throw InvalidArgument("to_tensor: unequal lengths; pad the dataset first");
    if (s.hasNaN()) throw InvalidArgument("dataset '" + dataset.name + "' has missing values; use --interpolate");
    t.sample(static_cast<Index>(i)) = s;
  }
  return t;
}

Tensor to_tensor(const TimeSeriesDataset& dataset) {
  std::vector<std::size_t> all(dataset.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return to_tensor(dataset, all);
}

}  // namespace omniscale
