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


// Synthetic datasets shared by the unit and acceptance tests.

#ifndef OMNISCALE_TESTS_FIXTURES_HPP
#define OMNISCALE_TESTS_FIXTURES_HPP

#include <cmath>
#include <numbers>
#include <random>

#include "omniscale/data_io.hpp"

namespace fixture {

/// Class 0: noisy sine, class 1: noisy square wave of the same frequency,
/// random phase. Separable by the presence of sharp edges.
inline omniscale::TimeSeriesDataset sine_square(int per_class, int length, std::uint64_t seed,
                                                 omniscale::Split split = omniscale::Split::kTrain) {
  omniscale::TimeSeriesDataset ds;
  ds.name = "SineSquare";
  ds.split = split;
  ds.class_names = {"sine", "square"};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::normal_distribution<double> noise(0.0, 0.1);
  for (int i = 0; i < 2 * per_class; ++i) {
    const int label = i % 2;
    const double phi = phase(rng);
    Eigen::MatrixXd s(1, length);
    for (int t = 0; t < length; ++t) {
      const double v = std::sin(2.0 * std::numbers::pi * 2.0 * t / length + phi);
      s(0, t) = (label == 0 ? v : (v >= 0.0 ? 1.0 : -1.0)) + noise(rng);
    }
    ds.samples.push_back(s);
    ds.labels.push_back(label);
    ds.original_lengths.push_back(length);
  }
  return ds;
}

inline omniscale::DatasetPair sine_square_pair(int train_per_class, int test_per_class, int length, std::uint64_t seed) {
  return {sine_square(train_per_class, length, seed, omniscale::Split::kTrain),
          sine_square(test_per_class, length, seed + 1000003, omniscale::Split::kTest)};
}

/// Relabels so that exactly half of each true class carries each label,
/// making labels independent of content.
inline omniscale::TimeSeriesDataset balanced_shuffle(omniscale::TimeSeriesDataset ds, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (int cls = 0; cls < ds.n_classes(); ++cls) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < ds.size(); ++i)
      if (ds.labels[i] == cls) members.push_back(i);
    std::shuffle(members.begin(), members.end(), rng);
    for (std::size_t k = 0; k < members.size(); ++k) ds.labels[members[k]] = static_cast<int>(k % 2);
  }
  return ds;
}

}  // namespace fixture

#endif  // OMNISCALE_TESTS_FIXTURES_HPP
