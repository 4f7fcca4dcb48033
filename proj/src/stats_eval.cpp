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


#include "omniscale/stats_eval.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "omniscale/errors.hpp"

namespace omniscale {

namespace {

std::string fmt(double v) {
  if (std::isnan(v)) return "";
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

std::vector<std::string> split_csv_line(std::string_view line, std::size_t line_no) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cell += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cell += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(std::move(cell));
      cell.clear();
    } else {
      cell += c;
    }
  }
  if (quoted) throw ParseError("unterminated quote", line_no);
  cells.push_back(std::move(cell));
  for (auto& c : cells) {
    const auto b = c.find_first_not_of(" \t");
    const auto e = c.find_last_not_of(" \t");
    c = b == std::string::npos ? std::string() : c.substr(b, e - b + 1);
  }
  return cells;
}

void require_same_length(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const char* what) {
  if (a.size() != b.size())
    throw InvalidArgument(std::string(what) + ": length mismatch (" + std::to_string(a.size()) + " vs " +
                          std::to_string(b.size()) + ")");
  if (a.hasNaN() || b.hasNaN()) throw InvalidArgument(std::string(what) + ": missing accuracy");
}

// Tie-averaged ranks (1-based) of |d|.
std::vector<double> abs_ranks(const std::vector<std::int64_t>& d) {
  std::vector<std::size_t> idx(d.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) { return std::llabs(d[x]) < std::llabs(d[y]); });
  std::vector<double> ranks(d.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && std::llabs(d[idx[j + 1]]) == std::llabs(d[idx[i]])) ++j;
    const double r = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t t = i; t <= j; ++t) ranks[idx[t]] = r;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

std::string to_string(Provenance p) { return p == Provenance::kOwnRun ? "own-run" : "published-table"; }

Index AccuracyMatrix::classifier_index(std::string_view name) const {
  const auto it = std::find(classifiers.begin(), classifiers.end(), name);
  if (it == classifiers.end()) throw InvalidArgument("unknown classifier '" + std::string(name) + "'");
  return it - classifiers.begin();
}

Index AccuracyMatrix::dataset_index(std::string_view name) const {
  const auto it = std::find(datasets.begin(), datasets.end(), name);
  if (it == datasets.end()) throw InvalidArgument("unknown dataset '" + std::string(name) + "'");
  return it - datasets.begin();
}

Eigen::VectorXd AccuracyMatrix::column(std::string_view name) const {
  const Index c = classifier_index(name);
  for (Index d = 0; d < n_datasets(); ++d)
    if (std::isnan(values(d, c)))
      throw InvalidArgument("classifier '" + std::string(name) + "' has no accuracy for dataset '" +
                            datasets[static_cast<std::size_t>(d)] + "'");
  return values.col(c);
}

void AccuracyMatrix::validate() const {
  if (values.rows() != static_cast<Index>(datasets.size()) || values.cols() != static_cast<Index>(classifiers.size()))
    throw InvalidArgument("accuracy matrix shape disagrees with its name lists");
  if (provenance.size() != static_cast<std::size_t>(values.size()))
    throw InvalidArgument("accuracy matrix needs one provenance per cell");
  if (std::set<std::string>(classifiers.begin(), classifiers.end()).size() != classifiers.size())
    throw InvalidArgument("duplicate classifier name");
  if (std::set<std::string>(datasets.begin(), datasets.end()).size() != datasets.size())
    throw InvalidArgument("duplicate dataset name");
  for (Index k = 0; k < values.size(); ++k) {
    const double v = values.data()[k];
    if (!std::isnan(v) && !(v >= 0.0 && v <= 1.0)) throw InvalidArgument("accuracy outside [0, 1]: " + fmt(v));
  }
}

AccuracyMatrix parse_accuracy_csv_text(std::string_view text, Provenance provenance) {
  AccuracyMatrix m;
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    auto cells = split_csv_line(line, line_no);
    if (m.classifiers.empty()) {
      if (cells.size() < 2) throw ParseError("header needs a dataset column and at least one classifier", line_no);
      m.classifiers.assign(cells.begin() + 1, cells.end());
      if (std::set<std::string>(m.classifiers.begin(), m.classifiers.end()).size() != m.classifiers.size())
        throw ParseError("duplicate classifier name in header", line_no);
      continue;
    }
    if (cells.size() != m.classifiers.size() + 1)
      throw ParseError("expected " + std::to_string(m.classifiers.size() + 1) + " cells, found " +
                           std::to_string(cells.size()),
                       line_no);
    if (std::find(m.datasets.begin(), m.datasets.end(), cells[0]) != m.datasets.end())
      throw ParseError("duplicate dataset '" + cells[0] + "'", line_no);
    m.datasets.push_back(cells[0]);
    std::vector<double> row;
    for (std::size_t i = 1; i < cells.size(); ++i) {
      if (cells[i].empty()) {
        row.push_back(std::nan(""));
        continue;
      }
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(cells[i].data(), cells[i].data() + cells[i].size(), v);
      if (ec != std::errc() || ptr != cells[i].data() + cells[i].size())
        throw ParseError("non-numeric accuracy '" + cells[i] + "'", line_no);
      if (!(v >= 0.0 && v <= 1.0)) throw ParseError("accuracy outside [0, 1]: " + cells[i], line_no);
      row.push_back(v);
    }
    rows.push_back(std::move(row));
  }
  if (m.classifiers.empty()) throw EmptyDataset("accuracy CSV is empty");
  m.values.resize(static_cast<Index>(rows.size()), static_cast<Index>(m.classifiers.size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c) m.values(static_cast<Index>(r), static_cast<Index>(c)) = rows[r][c];
  m.provenance.assign(static_cast<std::size_t>(m.values.size()), provenance);
  return m;
}

AccuracyMatrix parse_accuracy_csv(const std::filesystem::path& path, Provenance provenance) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return parse_accuracy_csv_text(os.str(), provenance);
}

std::string accuracy_csv(const AccuracyMatrix& m) {
  std::string out = "dataset";
  for (const auto& c : m.classifiers) out += "," + csv_field(c);
  out += "\n";
  for (Index d = 0; d < m.n_datasets(); ++d) {
    out += csv_field(m.datasets[static_cast<std::size_t>(d)]);
    for (Index c = 0; c < m.n_classifiers(); ++c) out += "," + fmt(m.values(d, c));
    out += "\n";
  }
  return out;
}

AccuracyMatrix join_classifiers(const AccuracyMatrix& left, const AccuracyMatrix& right) {
  const std::set<std::string> l(left.datasets.begin(), left.datasets.end());
  const std::set<std::string> r(right.datasets.begin(), right.datasets.end());
  for (const auto& d : l)
    if (!r.contains(d)) throw InvalidArgument("dataset '" + d + "' missing from the right-hand matrix");
  for (const auto& d : r)
    if (!l.contains(d)) throw InvalidArgument("dataset '" + d + "' missing from the left-hand matrix");
  AccuracyMatrix out;
  out.datasets = left.datasets;
  out.classifiers = left.classifiers;
  out.classifiers.insert(out.classifiers.end(), right.classifiers.begin(), right.classifiers.end());
  if (std::set<std::string>(out.classifiers.begin(), out.classifiers.end()).size() != out.classifiers.size())
    throw InvalidArgument("classifier names collide when joining matrices");
  const Index kl = left.n_classifiers();
  out.values.resize(left.n_datasets(), kl + right.n_classifiers());
  out.provenance.resize(static_cast<std::size_t>(out.values.size()));
  for (Index d = 0; d < left.n_datasets(); ++d) {
    const Index rd = right.dataset_index(out.datasets[static_cast<std::size_t>(d)]);
    for (Index c = 0; c < out.n_classifiers(); ++c) {
      const bool from_left = c < kl;
      out.values(d, c) = from_left ? left.values(d, c) : right.values(rd, c - kl);
      out.provenance[static_cast<std::size_t>(d * out.n_classifiers() + c)] =
          from_left ? left.provenance_at(d, c) : right.provenance_at(rd, c - kl);
    }
  }
  return out;
}

AccuracyMatrix matrix_from_runs(const std::vector<RunResult>& runs, RunMetric metric) {
  AccuracyMatrix m;
  std::map<std::pair<std::string, std::string>, double> cell;
  for (const auto& r : runs) {
    if (!r.complete) continue;
    if (metric == RunMetric::kLeaveOneOut && r.loo_accuracies.empty()) continue;
    if (std::find(m.datasets.begin(), m.datasets.end(), r.dataset) == m.datasets.end()) m.datasets.push_back(r.dataset);
    if (std::find(m.classifiers.begin(), m.classifiers.end(), r.model) == m.classifiers.end())
      m.classifiers.push_back(r.model);
    cell[{r.dataset, r.model}] =
        metric == RunMetric::kTestAccuracy
            ? r.mean_accuracy
            : std::accumulate(r.loo_accuracies.begin(), r.loo_accuracies.end(), 0.0) /
                  static_cast<double>(r.loo_accuracies.size());
  }
  m.values = Eigen::MatrixXd::Constant(static_cast<Index>(m.datasets.size()), static_cast<Index>(m.classifiers.size()),
                                       std::nan(""));
  for (const auto& [key, v] : cell) m.values(m.dataset_index(key.first), m.classifier_index(key.second)) = v;
  m.provenance.assign(static_cast<std::size_t>(m.values.size()), Provenance::kOwnRun);
  return m;
}

std::int64_t round8_units(double x) {
  if (!(x >= 0.0 && x <= 1.0)) throw InvalidArgument("round8 expects a value in [0, 1], got " + fmt(x));
  std::array<char, 400> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x, std::chars_format::fixed);
  const std::string_view s(buf.data(), static_cast<std::size_t>(ptr - buf.data()));
  const auto dot = s.find('.');
  const std::string_view whole = s.substr(0, dot);
  const std::string_view frac = dot == std::string_view::npos ? std::string_view() : s.substr(dot + 1);
  std::int64_t units = whole == "1" ? 1 : 0;
  for (std::size_t i = 0; i < 8; ++i) units = units * 10 + (i < frac.size() ? frac[i] - '0' : 0);
  // Any digit 5 or above in the ninth place means at least half a unit.
  if (frac.size() > 8 && frac[8] >= '5') ++units;
  return units;
}

double round8(double x) { return static_cast<double>(round8_units(x)) / 1e8; }

WinTally pairwise_wins(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  require_same_length(a, b, "pairwise_wins");
  WinTally t;
  for (Index i = 0; i < a.size(); ++i) {
    const auto x = round8_units(a[i]);
    const auto y = round8_units(b[i]);
    if (x > y) ++t.a_wins;
    else if (y > x) ++t.b_wins;
    else ++t.ties;
  }
  return t;
}

RankTable average_ranks(const AccuracyMatrix& matrix) {
  const Index k = matrix.n_classifiers();
  if (k < 2) throw InvalidArgument("average_ranks needs at least two classifiers");
  if (matrix.n_datasets() < 1) throw InvalidArgument("average_ranks needs at least one dataset");
  RankTable t;
  t.per_dataset.resize(matrix.n_datasets(), k);
  for (Index d = 0; d < matrix.n_datasets(); ++d) {
    std::vector<std::int64_t> u(static_cast<std::size_t>(k));
    for (Index c = 0; c < k; ++c) {
      if (std::isnan(matrix.values(d, c)))
        throw InvalidArgument("missing accuracy for dataset '" + matrix.datasets[static_cast<std::size_t>(d)] + "'");
      u[static_cast<std::size_t>(c)] = round8_units(matrix.values(d, c));
    }
    for (std::size_t c = 0; c < u.size(); ++c) {
      const auto better = std::count_if(u.begin(), u.end(), [&](std::int64_t v) { return v > u[c]; });
      const auto tied = std::count(u.begin(), u.end(), u[c]);
      t.per_dataset(d, static_cast<Index>(c)) = static_cast<double>(better) + (static_cast<double>(tied) + 1.0) / 2.0;
    }
  }
  t.average = t.per_dataset.colwise().mean().transpose();
  return t;
}

double exact_signed_rank_p(const std::vector<double>& abs_ranks, double w_plus) {
  const std::size_t n = abs_ranks.size();
  if (n == 0) return 1.0;
  // Tie-averaged ranks are multiples of 1/2, so doubled ranks are integers.
  std::vector<std::int64_t> r2(n);
  std::int64_t total = 0;
  for (std::size_t i = 0; i < n; ++i) total += r2[i] = std::llround(2.0 * abs_ranks[i]);
  std::vector<double> count(static_cast<std::size_t>(total) + 1, 0.0);
  count[0] = 1.0;
  for (std::int64_t r : r2)
    for (std::int64_t s = total; s >= r; --s) count[static_cast<std::size_t>(s)] += count[static_cast<std::size_t>(s - r)];
  const std::int64_t w2 = std::llround(2.0 * w_plus);
  double lower = 0.0, upper = 0.0;
  for (std::int64_t s = 0; s <= total; ++s) {
    if (s <= w2) lower += count[static_cast<std::size_t>(s)];
    if (s >= w2) upper += count[static_cast<std::size_t>(s)];
  }
  return std::min(1.0, 2.0 * std::min(lower, upper) / std::ldexp(1.0, static_cast<int>(n)));
}

SignedRankResult wilcoxon_signed_rank(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  require_same_length(a, b, "wilcoxon_signed_rank");
  std::vector<std::int64_t> d;
  for (Index i = 0; i < a.size(); ++i)
    if (const auto diff = round8_units(a[i]) - round8_units(b[i]); diff != 0) d.push_back(diff);
  SignedRankResult res;
  res.n = static_cast<int>(d.size());
  if (d.empty()) {
    res.exact = true;
    return res;
  }
  const auto ranks = abs_ranks(d);
  for (std::size_t i = 0; i < d.size(); ++i) (d[i] > 0 ? res.w_plus : res.w_minus) += ranks[i];
  if (res.n <= kExactSignedRankLimit) {
    res.exact = true;
    res.p_value = exact_signed_rank_p(ranks, res.w_plus);
    return res;
  }
  const double n = res.n;
  double tie_term = 0.0;
  std::map<double, int> groups;
  for (double r : ranks) ++groups[r];
  for (const auto& [r, t] : groups) tie_term += static_cast<double>(t) * t * t - t;
  const double mean = n * (n + 1.0) / 4.0;
  const double var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
  if (!(var > 0.0)) return res;
  const double z = (res.w_plus - mean) / std::sqrt(var);
  res.p_value = std::min(1.0, std::erfc(std::abs(z) / std::sqrt(2.0)));
  return res;
}

std::vector<double> holm_adjust(const std::vector<double>& p) {
  const std::size_t m = p.size();
  std::vector<std::size_t> idx(m);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) { return p[x] < p[y]; });
  std::vector<double> adjusted(m);
  double running = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    running = std::max(running, std::min(1.0, static_cast<double>(m - i) * p[idx[i]]));
    adjusted[idx[i]] = running;
  }
  return adjusted;
}

CriticalDifference wilcoxon_holm(const AccuracyMatrix& matrix, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("alpha must be in (0, 1)");
  CriticalDifference cd;
  cd.alpha = alpha;
  cd.classifiers = matrix.classifiers;
  cd.average_ranks = average_ranks(matrix).average;
  const Index k = matrix.n_classifiers();

  std::vector<double> raw;
  for (Index a = 0; a < k; ++a)
    for (Index b = a + 1; b < k; ++b) {
      PairTest t;
      t.a = a;
      t.b = b;
      t.test = wilcoxon_signed_rank(matrix.values.col(a), matrix.values.col(b));
      raw.push_back(t.test.p_value);
      cd.pairs.push_back(t);
    }
  const auto adjusted = holm_adjust(raw);
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> significant =
      Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(k, k, false);
  for (std::size_t i = 0; i < cd.pairs.size(); ++i) {
    auto& t = cd.pairs[i];
    t.adjusted_p = adjusted[i];
    t.significant = adjusted[i] <= alpha;
    significant(t.a, t.b) = significant(t.b, t.a) = t.significant;
  }

  cd.order.resize(static_cast<std::size_t>(k));
  std::iota(cd.order.begin(), cd.order.end(), Index{0});
  std::stable_sort(cd.order.begin(), cd.order.end(),
                   [&](Index x, Index y) { return cd.average_ranks[x] < cd.average_ranks[y]; });

  Index reach = -1;
  for (Index i = 0; i < k; ++i) {
    Index j = i;
    auto joins = [&](Index next) {
      for (Index x = i; x <= j; ++x)
        if (significant(cd.order[static_cast<std::size_t>(x)], cd.order[static_cast<std::size_t>(next)])) return false;
      return true;
    };
    while (j + 1 < k && joins(j + 1)) ++j;
    if (j > reach) {
      cd.cliques.emplace_back(cd.order.begin() + i, cd.order.begin() + j + 1);
      reach = j;
    }
  }
  return cd;
}

nlohmann::json critical_difference_json(const CriticalDifference& cd) {
  nlohmann::json ranks = nlohmann::json::object();
  for (std::size_t c = 0; c < cd.classifiers.size(); ++c) ranks[cd.classifiers[c]] = cd.average_ranks[static_cast<Index>(c)];
  nlohmann::json order = nlohmann::json::array();
  for (Index c : cd.order) order.push_back(cd.classifiers[static_cast<std::size_t>(c)]);
  nlohmann::json cliques = nlohmann::json::array();
  for (const auto& clique : cd.cliques) {
    nlohmann::json names = nlohmann::json::array();
    for (Index c : clique) names.push_back(cd.classifiers[static_cast<std::size_t>(c)]);
    cliques.push_back(names);
  }
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& p : cd.pairs)
    pairs.push_back({{"a", cd.classifiers[static_cast<std::size_t>(p.a)]},
                     {"b", cd.classifiers[static_cast<std::size_t>(p.b)]},
                     {"n", p.test.n},
                     {"w_plus", p.test.w_plus},
                     {"w_minus", p.test.w_minus},
                     {"p_value", p.test.p_value},
                     {"exact", p.test.exact},
                     {"holm_p", p.adjusted_p},
                     {"significant", p.significant}});
  return {{"alpha", cd.alpha}, {"ranks", ranks}, {"order", order}, {"cliques", cliques}, {"pairs", pairs}};
}

std::string to_string(Quadrant q) {
  switch (q) {
    case Quadrant::kTruePositive: return "TP";
    case Quadrant::kFalsePositive: return "FP";
    case Quadrant::kTrueNegative: return "TN";
    case Quadrant::kFalseNegative: return "FN";
  }
  return "TN";
}

Quadrant texas_quadrant(double expected_gain, double actual_gain) {
  if (!(expected_gain > 0.0) || !std::isfinite(expected_gain) || !(actual_gain > 0.0) || !std::isfinite(actual_gain))
    throw InvalidArgument("gains must be positive finite ratios, got " + fmt(expected_gain) + " and " + fmt(actual_gain));
  const bool expect_up = expected_gain > 1.0;
  const bool actual_up = actual_gain > 1.0;
  if (expect_up) return actual_up ? Quadrant::kTruePositive : Quadrant::kFalsePositive;
  return actual_up ? Quadrant::kFalseNegative : Quadrant::kTrueNegative;
}

std::vector<SharpshooterPoint> texas_sharpshooter(const AccuracyMatrix& train_side, const AccuracyMatrix& test_side,
                                                  const std::string& candidate, const std::string& baseline) {
  const Index tc = train_side.classifier_index(candidate), tb = train_side.classifier_index(baseline);
  const Index sc = test_side.classifier_index(candidate), sb = test_side.classifier_index(baseline);
  std::vector<SharpshooterPoint> points;
  for (Index d = 0; d < test_side.n_datasets(); ++d) {
    const auto& name = test_side.datasets[static_cast<std::size_t>(d)];
    const Index td = train_side.dataset_index(name);
    SharpshooterPoint p;
    p.dataset = name;
    p.expected_gain = train_side.values(td, tc) / train_side.values(td, tb);
    p.actual_gain = test_side.values(d, sc) / test_side.values(d, sb);
    p.quadrant = texas_quadrant(p.expected_gain, p.actual_gain);
    points.push_back(p);
  }
  return points;
}

std::string sharpshooter_csv(const std::vector<SharpshooterPoint>& points) {
  std::string out = "dataset,expected_gain,actual_gain,quadrant\n";
  for (const auto& p : points)
    out += csv_field(p.dataset) + "," + fmt(p.expected_gain) + "," + fmt(p.actual_gain) + "," + to_string(p.quadrant) + "\n";
  return out;
}

Eigen::VectorXd relative_deltas(const Eigen::VectorXd& candidate, const Eigen::VectorXd& baseline) {
  require_same_length(candidate, baseline, "relative_deltas");
  return candidate - baseline;
}

std::vector<RelativeRow> relative_accuracy_report(const AccuracyMatrix& matrix, const std::string& candidate,
                                                  const std::vector<std::string>& baselines) {
  const Eigen::VectorXd cand = matrix.column(candidate);
  std::vector<RelativeRow> rows;
  for (const auto& name : baselines) {
    const Eigen::VectorXd base = matrix.column(name);
    const Eigen::VectorXd delta = relative_deltas(cand, base);
    std::vector<RelativeRow> block;
    for (Index d = 0; d < matrix.n_datasets(); ++d)
      block.push_back({name, matrix.datasets[static_cast<std::size_t>(d)], cand[d], base[d], delta[d]});
    std::sort(block.begin(), block.end(), [](const RelativeRow& x, const RelativeRow& y) {
      return x.delta != y.delta ? x.delta < y.delta : x.dataset < y.dataset;
    });
    rows.insert(rows.end(), block.begin(), block.end());
  }
  return rows;
}

std::string relative_accuracy_csv(const std::vector<RelativeRow>& rows) {
  std::string out = "baseline,dataset,candidate_accuracy,baseline_accuracy,delta\n";
  for (const auto& r : rows)
    out += csv_field(r.baseline) + "," + csv_field(r.dataset) + "," + fmt(r.candidate_accuracy) + "," +
           fmt(r.baseline_accuracy) + "," + fmt(r.delta) + "\n";
  return out;
}

}  // namespace omniscale
