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


#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "omniscale/errors.hpp"
#include "omniscale/stats_eval.hpp"
#include "oracles.hpp"

using namespace omniscale;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

AccuracyMatrix matrix_of(const std::vector<std::string>& names, const Eigen::MatrixXd& values) {
  AccuracyMatrix m;
  m.classifiers = names;
  for (Index d = 0; d < values.rows(); ++d) m.datasets.push_back("d" + std::to_string(d));
  m.values = values;
  m.provenance.assign(static_cast<std::size_t>(values.size()), Provenance::kOwnRun);
  return m;
}

// Differences d become accuracies 0.5 + d/100 against a flat 0.5.
std::pair<Eigen::VectorXd, Eigen::VectorXd> from_differences(const std::vector<int>& d) {
  Eigen::VectorXd a(static_cast<Index>(d.size())), b = Eigen::VectorXd::Constant(static_cast<Index>(d.size()), 0.5);
  for (std::size_t i = 0; i < d.size(); ++i) a[static_cast<Index>(i)] = 0.5 + d[i] / 100.0;
  return {a, b};
}

// Ranks by sorting a copy, averaging over equal runs.
std::vector<double> sorted_ranks(const std::vector<double>& xs) {
  std::vector<double> out(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double below = 0, equal = 0;
    for (double y : xs) {
      below += std::abs(y) < std::abs(xs[i]);
      equal += std::abs(y) == std::abs(xs[i]);
    }
    out[i] = below + (equal + 1) / 2;
  }
  return out;
}

}  // namespace

TEST_CASE("round8") {
  CHECK(round8(0.123456789) == 0.12345679);
  CHECK(round8(1.0) == 1.0);
  CHECK(round8(0.5) == 0.5);
  CHECK(round8(0.0) == 0.0);
  CHECK(round8(0.123456785) == 0.12345679);  // half goes up
  CHECK(round8(0.123456784999) == 0.12345678);
  CHECK(round8(0.999999995) == 1.0);
  CHECK(round8_units(0.12345678) == 12345678);
  CHECK_THROWS_AS(round8(1.5), InvalidArgument);
  CHECK_THROWS_AS(round8(-0.1), InvalidArgument);
  CHECK_THROWS_AS(round8(std::nan("")), InvalidArgument);

  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 2000; ++i) {
    const double x = u(rng);
    CHECK(std::abs(round8(x) - x) <= 5e-9 + 1e-15);
    CHECK(round8(round8(x)) == round8(x));
  }
}

TEST_CASE("pairwise wins") {
  const auto t = pairwise_wins(vec({0.9, 0.8}), vec({0.8, 0.8}));
  CHECK(t.a_wins == 1);
  CHECK(t.b_wins == 0);
  CHECK(t.ties == 1);
  const auto same = pairwise_wins(vec({0.1, 0.2, 0.3}), vec({0.1, 0.2, 0.3}));
  CHECK(same.ties == 3);
  const auto r = pairwise_wins(vec({0.123456789}), vec({0.123456781}));
  CHECK(r.a_wins == 1);
  CHECK(pairwise_wins(vec({0.123456781}), vec({0.123456784})).ties == 1);
  CHECK_THROWS_AS(pairwise_wins(vec({0.1}), vec({0.1, 0.2})), InvalidArgument);

  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> pick(0, 4);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::VectorXd a(9), b(9);
    for (Index i = 0; i < 9; ++i) {
      a[i] = pick(rng) / 4.0;
      b[i] = pick(rng) / 4.0;
    }
    const auto ab = pairwise_wins(a, b);
    const auto ba = pairwise_wins(b, a);
    CHECK(ab.a_wins + ab.b_wins + ab.ties == 9);
    CHECK(ab.a_wins == ba.b_wins);
    CHECK(ab.b_wins == ba.a_wins);
    CHECK(ab.ties == ba.ties);
  }
}

TEST_CASE("average ranks") {
  Eigen::MatrixXd v(2, 2);
  v << 0.9, 0.8, 0.7, 0.6;
  const auto r = average_ranks(matrix_of({"A", "B"}, v));
  CHECK(r.average[0] == 1.0);
  CHECK(r.average[1] == 2.0);

  Eigen::MatrixXd tied = Eigen::MatrixXd::Constant(1, 4, 0.5);
  CHECK((average_ranks(matrix_of({"a", "b", "c", "d"}, tied)).per_dataset.array() == 2.5).all());

  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> grid(0, 20);
  for (int trial = 0; trial < 30; ++trial) {
    const Index k = 2 + trial % 5;
    Eigen::MatrixXd m(7, k);
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = grid(rng) / 20.0;
    std::vector<std::string> names;
    for (Index c = 0; c < k; ++c) names.push_back("c" + std::to_string(c));
    const auto ranks = average_ranks(matrix_of(names, m));
    for (Index d = 0; d < m.rows(); ++d) CHECK(ranks.per_dataset.row(d).sum() == doctest::Approx(k * (k + 1) / 2.0));
    // strictly monotone maps into [0, 1] leave ranks unchanged
    for (auto f : {+[](double x) { return x * x; }, +[](double x) { return std::sqrt(x); },
                   +[](double x) { return (std::exp(x) - 1.0) / (std::exp(1.0) - 1.0); }}) {
      const auto mapped = average_ranks(matrix_of(names, m.unaryExpr(f)));
      CHECK(mapped.per_dataset == ranks.per_dataset);
    }
  }
}

TEST_CASE("exact signed-rank p matches enumeration") {
  const auto [a, b] = from_differences({1, 2, 3, 4, 5, 6});
  const auto res = wilcoxon_signed_rank(a, b);
  CHECK(res.exact);
  CHECK(res.p_value == doctest::Approx(0.03125).epsilon(1e-12));

  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> diff(-6, 6);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + trial % 12;
    std::vector<int> d;
    while (static_cast<int>(d.size()) < n) {
      const int x = diff(rng);
      if (x != 0) d.push_back(x);
    }
    const auto [x, y] = from_differences(d);
    const auto r = wilcoxon_signed_rank(x, y);
    REQUIRE(r.n == n);
    std::vector<double> dd(d.begin(), d.end());
    const auto ranks = sorted_ranks(dd);
    double w = 0;
    for (std::size_t i = 0; i < d.size(); ++i)
      if (d[i] > 0) w += ranks[i];
    CHECK(r.w_plus == w);
    CHECK(r.p_value == doctest::Approx(oracle::enumerate_signed_rank_p(ranks, w)).epsilon(1e-12));
  }
}

TEST_CASE("signed-rank zeros, identical inputs and normal approximation") {
  const auto same = wilcoxon_signed_rank(vec({0.1, 0.2, 0.3}), vec({0.1, 0.2, 0.3}));
  CHECK(same.n == 0);
  CHECK(same.p_value == 1.0);

  // zero differences are dropped before ranking
  const auto [a, b] = from_differences({0, 0, 1, 2, 3, 4, 5, 6});
  CHECK(wilcoxon_signed_rank(a, b).n == 6);
  CHECK(wilcoxon_signed_rank(a, b).p_value == doctest::Approx(0.03125));

  // reference values from an independent implementation (no continuity correction)
  std::vector<int> up(20);
  std::iota(up.begin(), up.end(), 1);
  const auto [u, v] = from_differences(up);
  const auto big = wilcoxon_signed_rank(u, v);
  CHECK_FALSE(big.exact);
  CHECK(big.p_value == doctest::Approx(8.857457687863572e-05).epsilon(1e-9));
  const auto [t, s] = from_differences({1, 1, 2, 2, 2, 3, -4, 5, 6, 7, 8, -9, 10, 11, 12, 13});
  const auto tied = wilcoxon_signed_rank(t, s);
  CHECK(tied.w_minus == 19.0);
  CHECK(tied.p_value == doctest::Approx(0.011217495523773857).epsilon(1e-9));
}

TEST_CASE("holm adjustment") {
  const std::vector<double> p{0.01, 0.04, 0.03, 0.005};
  const auto adj = holm_adjust(p);
  // sorted: 0.005*4, 0.01*3, 0.03*2, 0.04*1 -> 0.02, 0.03, 0.06, 0.06
  CHECK(adj[3] == doctest::Approx(0.02));
  CHECK(adj[0] == doctest::Approx(0.03));
  CHECK(adj[2] == doctest::Approx(0.06));
  CHECK(adj[1] == doctest::Approx(0.06));

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 0.3);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> raw(1 + trial % 10);
    for (auto& x : raw) x = u(rng);
    const auto a = holm_adjust(raw);
    std::vector<std::size_t> idx(raw.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](auto x, auto y) { return raw[x] < raw[y]; });
    for (std::size_t i = 0; i < idx.size(); ++i) {
      CHECK(a[idx[i]] >= raw[idx[i]]);
      CHECK(a[idx[i]] <= 1.0);
      if (i) CHECK(a[idx[i]] >= a[idx[i - 1]]);
    }
  }
}

TEST_CASE("critical difference cliques") {
  // A beats B and C on all ten datasets; B and C alternate.
  Eigen::MatrixXd v(10, 3);
  for (Index d = 0; d < 10; ++d) {
    v(d, 0) = 0.95;
    v(d, 1) = d % 2 ? 0.70 : 0.60;
    v(d, 2) = d % 2 ? 0.60 : 0.70;
  }
  const auto cd = wilcoxon_holm(matrix_of({"A", "B", "C"}, v));
  CHECK(cd.order.front() == 0);
  REQUIRE(cd.cliques.size() == 2);
  CHECK(cd.cliques[0] == std::vector<Index>{0});
  CHECK(cd.cliques[1].size() == 2);
  for (const auto& p : cd.pairs) CHECK(p.significant == (p.a == 0));

  const auto json = critical_difference_json(cd);
  CHECK(json["ranks"]["A"] == 1.0);
  CHECK(json["cliques"][0] == nlohmann::json::array({"A"}));

  // identical classifiers share one clique
  Eigen::MatrixXd same(6, 2);
  same.col(0).setLinSpaced(0.1, 0.6);
  same.col(1) = same.col(0);
  const auto cd2 = wilcoxon_holm(matrix_of({"X", "Y"}, same));
  CHECK(cd2.pairs[0].test.p_value == 1.0);
  REQUIRE(cd2.cliques.size() == 1);
  CHECK(cd2.cliques[0].size() == 2);
}

TEST_CASE("cliques are maximal non-significant runs") {
  // Random fixtures: every clique is an interval of the rank order with no
  // significant pair, no clique extends, and every classifier is covered.
  std::mt19937_64 rng(6);
  std::normal_distribution<double> noise(0.0, 0.05);
  for (int trial = 0; trial < 20; ++trial) {
    const Index k = 3 + trial % 4;
    Eigen::MatrixXd v(15, k);
    for (Index d = 0; d < v.rows(); ++d)
      for (Index c = 0; c < k; ++c) v(d, c) = std::clamp(0.5 + 0.04 * c + noise(rng), 0.0, 1.0);
    std::vector<std::string> names;
    for (Index c = 0; c < k; ++c) names.push_back("c" + std::to_string(c));
    const auto cd = wilcoxon_holm(matrix_of(names, v));
    auto sig = [&](Index x, Index y) {
      for (const auto& p : cd.pairs)
        if ((p.a == x && p.b == y) || (p.a == y && p.b == x)) return p.significant;
      return false;
    };
    std::vector<int> covered(static_cast<std::size_t>(k), 0);
    for (const auto& clique : cd.cliques) {
      const auto first = std::find(cd.order.begin(), cd.order.end(), clique.front()) - cd.order.begin();
      for (std::size_t i = 0; i < clique.size(); ++i) {
        CHECK(clique[i] == cd.order[static_cast<std::size_t>(first) + i]);
        ++covered[static_cast<std::size_t>(clique[i])];
        for (std::size_t j = i + 1; j < clique.size(); ++j) CHECK_FALSE(sig(clique[i], clique[j]));
      }
      const std::size_t last = static_cast<std::size_t>(first) + clique.size() - 1;
      if (last + 1 < static_cast<std::size_t>(k)) {
        bool extends = true;
        for (Index c : clique) extends = extends && !sig(c, cd.order[last + 1]);
        CHECK_FALSE(extends);
      }
    }
    for (int c : covered) CHECK(c >= 1);
  }
}

TEST_CASE("texas sharpshooter quadrants") {
  CHECK(texas_quadrant(1.1, 1.2) == Quadrant::kTruePositive);
  CHECK(texas_quadrant(1.1, 0.9) == Quadrant::kFalsePositive);
  CHECK(texas_quadrant(0.9, 1.1) == Quadrant::kFalseNegative);
  CHECK(texas_quadrant(0.9, 0.9) == Quadrant::kTrueNegative);
  CHECK(texas_quadrant(1.0, 1.0) == Quadrant::kTrueNegative);
  CHECK_THROWS_AS(texas_quadrant(0.0, 1.0), InvalidArgument);
  CHECK_THROWS_AS(texas_quadrant(1.0, -2.0), InvalidArgument);

  const auto train = parse_accuracy_csv_text("dataset,os,fcn\nA,0.9,0.8\nB,0.5,0.6\n");
  const auto test = parse_accuracy_csv_text("dataset,os,fcn\nB,0.7,0.6\nA,0.85,0.8\n");
  const auto pts = texas_sharpshooter(train, test, "os", "fcn");
  REQUIRE(pts.size() == 2);
  CHECK(pts[0].dataset == "B");
  CHECK(pts[0].quadrant == Quadrant::kFalseNegative);
  CHECK(pts[1].quadrant == Quadrant::kTruePositive);
  CHECK(sharpshooter_csv(pts).find("B,") != std::string::npos);
}

TEST_CASE("relative accuracy report") {
  const auto d = relative_deltas(vec({0.9}), vec({0.8}));
  CHECK(d[0] == doctest::Approx(0.1));
  CHECK(relative_deltas(vec({0.3, 0.4}), vec({0.3, 0.4})).isZero());
  CHECK_THROWS_AS(relative_deltas(vec({0.3}), vec({0.3, 0.4})), InvalidArgument);

  const auto m = parse_accuracy_csv_text(
      "dataset,OS-CNN-ENS(5),ROCKET,InceptionTime\nPLAID,0.7840,0.9,0.93\nGunPoint,1.0,1.0,1.0\nHam,0.8,0.7,0.75\n");
  const auto rows = relative_accuracy_report(m, "OS-CNN-ENS(5)", {"ROCKET", "InceptionTime"});
  REQUIRE(rows.size() == 6);
  CHECK(rows[0].baseline == "ROCKET");
  CHECK(rows[0].dataset == "PLAID");
  CHECK(rows[0].candidate_accuracy == 0.7840);
  CHECK(rows[0].delta == doctest::Approx(-0.116));
  CHECK(rows[2].dataset == "Ham");
  CHECK(rows[3].baseline == "InceptionTime");
  CHECK(relative_accuracy_csv(rows).rfind("baseline,dataset,", 0) == 0);
}

TEST_CASE("accuracy csv ingestion") {
  const auto m = parse_accuracy_csv_text("name,A,\"B, v2\"\nX,0.5,\nY,1,0.25\n", Provenance::kPublishedTable);
  CHECK(m.classifiers == std::vector<std::string>{"A", "B, v2"});
  CHECK(m.datasets == std::vector<std::string>{"X", "Y"});
  CHECK(std::isnan(m.values(0, 1)));
  CHECK(m.provenance_at(1, 0) == Provenance::kPublishedTable);
  CHECK_THROWS_AS(m.column("B, v2"), InvalidArgument);
  CHECK(m.column("A")[1] == 1.0);
  const auto back = parse_accuracy_csv_text(accuracy_csv(m));
  CHECK(back.classifiers == m.classifiers);
  CHECK(back.values(1, 1) == 0.25);

  CHECK_THROWS_AS(parse_accuracy_csv_text(""), EmptyDataset);
  CHECK_THROWS_AS(parse_accuracy_csv_text("d,A\nX,abc\n"), ParseError);
  CHECK_THROWS_AS(parse_accuracy_csv_text("d,A\nX,1.5\n"), ParseError);
  CHECK_THROWS_AS(parse_accuracy_csv_text("d,A\nX,0.1,0.2\n"), ParseError);
  CHECK_THROWS_AS(parse_accuracy_csv_text("d,A\nX,0.1\nX,0.2\n"), ParseError);

  const auto left = parse_accuracy_csv_text("dataset,A\nX,0.9\nY,0.8\n");
  const auto right = parse_accuracy_csv_text("dataset,B\nY,0.7\nX,0.9\n", Provenance::kOwnRun);
  const auto joined = join_classifiers(left, right);
  CHECK(joined.values(1, 1) == 0.7);
  CHECK(joined.provenance_at(0, 1) == Provenance::kOwnRun);
  const auto tally = pairwise_wins(joined.column("A"), joined.column("B"));
  CHECK(tally.a_wins == 1);
  CHECK(tally.ties == 1);
  CHECK_THROWS_AS(join_classifiers(left, parse_accuracy_csv_text("dataset,B\nY,0.7\n")), InvalidArgument);
}

TEST_CASE("matrix from run results") {
  std::vector<RunResult> runs{aggregate("D1", "os-cnn", {}, {0, 1}, {0.9, 1.0}),
                              aggregate("D1", "fcn", {}, {0}, {0.8}),
                              aggregate("D2", "os-cnn", {}, {0}, {0.7})};
  auto bad = aggregate("D2", "fcn", {}, {0}, {0.1});
  bad.complete = false;
  runs.push_back(bad);
  const auto m = matrix_from_runs(runs);
  CHECK(m.classifiers == std::vector<std::string>{"os-cnn", "fcn"});
  CHECK(m.values(0, 0) == doctest::Approx(0.95));
  CHECK(std::isnan(m.values(1, 1)));
  CHECK(m.provenance_at(0, 0) == Provenance::kOwnRun);
}
