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

#ifndef OMNISCALE_KERNEL_CONFIG_HPP
#define OMNISCALE_KERNEL_CONFIG_HPP

#include <cstdint>
#include <functional>
#include <set>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace omniscale {

using KernelList = std::vector<int>;

// Largest even number the Goldbach decomposition (and therefore the prime
// kernel family) is trusted for.
inline constexpr std::int64_t kGoldbachValidatedLimit = 400'000'000'000'000;

/// Kernel-size genotype of one OS block: one list of parallel kernel sizes
/// per layer and a uniform number of output channels per branch.
///
/// The canonical block has three layers: [1, 2, 3, 5, ..., M] twice, then
/// [1, 2]. Generic specs (any depth, any strictly increasing positive lists)
/// are accepted by the cost and coverage routines; validate_canonical()
/// checks the stricter shape.
struct OSBlockSpec {
  std::vector<KernelList> layer_kernel_lists;
  int branch_channels = 1;
  int in_channels = 1;

  static OSBlockSpec canonical(int max_prime, int in_channels = 1, int branch_channels = 1);

  // Number of output channels of the last layer.
  int out_channels() const;

  void validate() const;
  void validate_canonical() const;
};

void to_json(nlohmann::json& j, const OSBlockSpec& spec);
void from_json(const nlohmann::json& j, OSBlockSpec& spec);

struct CostBreakdown {
  std::vector<std::int64_t> per_layer_weights;
  std::int64_t total_weights = 0;
  std::int64_t max_rf = 0;
};

struct SequenceComparison {
  std::int64_t prime_sum = 0;
  std::int64_t arithmetic_sum = 0;
  int geometric_layers_needed = 0;
};

/// Sieve of Eratosthenes over [0, limit].
class PrimeSieve {
 public:
  explicit PrimeSieve(std::int64_t limit);

  std::int64_t limit() const { return limit_; }
  bool is_prime(std::int64_t n) const;
  const std::vector<std::int64_t>& primes() const { return primes_; }

 private:
  std::int64_t limit_;
  std::vector<bool> composite_;
  std::vector<std::int64_t> primes_;
};

// Deterministic Miller-Rabin for the full 64-bit range.
bool is_prime(std::uint64_t n);

std::vector<std::int64_t> primes_up_to(std::int64_t m);

// [1] followed by every prime <= max_prime.
KernelList prime_kernel_list(int max_prime);

/// All receptive fields 1 + sum(k_i - 1) reachable by choosing one kernel
/// per layer, stride 1.
std::set<std::int64_t> coverage_set(const std::vector<KernelList>& layer_kernel_lists);

// True when every RF in 1..rf is reachable.
bool covers_all_up_to(const std::vector<KernelList>& layer_kernel_lists, std::int64_t rf);

/// Smallest prime M whose canonical block reaches every RF in 1..ceil(N/2).
int select_max_prime(std::int64_t series_length);
/// Same search for an explicit target RF (clamped to >= 1).
int select_max_prime_for_rf(std::int64_t rf);

// Two primes summing to `even`, smallest first part.
std::pair<std::int64_t, std::int64_t> goldbach_decompose(std::int64_t even);
std::pair<std::int64_t, std::int64_t> goldbach_decompose(std::int64_t even, const PrimeSieve& sieve);

/// Weight count C * (R + (Z - 1) * S) of a Z-layer stride-S stack with RF R.
std::int64_t param_count_eq1(std::int64_t channels, std::int64_t rf, std::int64_t layers,
                             std::int64_t stride);

/// Weight-only cost of a block (no BN, no bias). Layer l reads
/// branch_channels * |list(l-1)| channels.
CostBreakdown count_block_weights(const OSBlockSpec& spec);

/// Largest branch channel count c >= 1 with weights_at(c) <= budget, for a
/// weights_at that is nondecreasing in c. Throws InfeasibleBudget when c = 1
/// already exceeds the budget.
int largest_channels_within(std::int64_t budget, const std::function<std::int64_t(int)>& weights_at);

int allocate_channels(std::int64_t weight_budget, const std::vector<KernelList>& layer_kernel_lists,
                      int in_channels);

SequenceComparison compare_sequences(std::int64_t rf);

void to_json(nlohmann::json& j, const SequenceComparison& cmp);

}  // namespace omniscale

#endif  // OMNISCALE_KERNEL_CONFIG_HPP
