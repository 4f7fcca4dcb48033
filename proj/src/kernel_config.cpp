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

#include "omniscale/kernel_config.hpp"

#include <algorithm>
#include <bit>
#include <numeric>
#include <string>

#include "omniscale/errors.hpp"

namespace omniscale {

namespace {

std::uint64_t mul_mod(std::uint64_t a, std::uint64_t b, std::uint64_t m) {
  return static_cast<std::uint64_t>(static_cast<unsigned __int128>(a) * b % m);
}

std::uint64_t pow_mod(std::uint64_t base, std::uint64_t exp, std::uint64_t m) {
  std::uint64_t result = 1;
  base %= m;
  while (exp) {
    if (exp & 1) result = mul_mod(result, base, m);
    base = mul_mod(base, base, m);
    exp >>= 1;
  }
  return result;
}

// Reachable RF offsets sum(k_i - 1) as a dense bitmap.
std::vector<char> reachable_offsets(const std::vector<KernelList>& lists) {
  std::vector<char> reach{1};
  for (const auto& list : lists) {
    const int widest = *std::max_element(list.begin(), list.end());
    std::vector<char> next(reach.size() + widest - 1, 0);
    for (std::size_t o = 0; o < reach.size(); ++o) {
      if (!reach[o]) continue;
      for (int k : list) next[o + k - 1] = 1;
    }
    reach = std::move(next);
  }
  return reach;
}

void check_lists(const std::vector<KernelList>& lists) {
  if (lists.empty()) throw InvalidArgument("kernel configuration has no layers");
  for (const auto& list : lists) {
    if (list.empty()) throw InvalidArgument("kernel list is empty");
    for (std::size_t i = 0; i < list.size(); ++i) {
      if (list[i] < 1) throw InvalidArgument("kernel sizes must be positive");
      if (i > 0 && list[i] <= list[i - 1])
        throw InvalidArgument("kernel lists must be strictly increasing");
    }
  }
}

std::int64_t kernel_sum(const KernelList& list) {
  return std::accumulate(list.begin(), list.end(), std::int64_t{0});
}

}  // namespace

OSBlockSpec OSBlockSpec::canonical(int max_prime, int in_channels, int branch_channels) {
  KernelList primes = prime_kernel_list(max_prime);
  return OSBlockSpec{{primes, primes, {1, 2}}, branch_channels, in_channels};
}

int OSBlockSpec::out_channels() const {
  return branch_channels * static_cast<int>(layer_kernel_lists.back().size());
}

void OSBlockSpec::validate() const {
  check_lists(layer_kernel_lists);
  if (branch_channels < 1) throw InvalidArgument("branch_channels must be positive");
  if (in_channels < 1) throw InvalidArgument("in_channels must be positive");
}

void OSBlockSpec::validate_canonical() const {
  validate();
  if (layer_kernel_lists.size() != 3) throw InvalidArgument("canonical OS block has 3 layers");
  if (layer_kernel_lists[0] != layer_kernel_lists[1])
    throw InvalidArgument("first two OS layers must share a kernel list");
  if (layer_kernel_lists[2] != KernelList{1, 2})
    throw InvalidArgument("third OS layer must use kernels [1, 2]");
  for (int k : layer_kernel_lists[0]) {
    if (k != 1 && !is_prime(static_cast<std::uint64_t>(k)))
      throw InvalidArgument("OS layer kernels must be 1 or prime, got " + std::to_string(k));
  }
}

void to_json(nlohmann::json& j, const OSBlockSpec& spec) {
  j = nlohmann::json{{"layer_kernel_lists", spec.layer_kernel_lists},
                     {"branch_channels", spec.branch_channels},
                     {"in_channels", spec.in_channels}};
}

void from_json(const nlohmann::json& j, OSBlockSpec& spec) {
  j.at("layer_kernel_lists").get_to(spec.layer_kernel_lists);
  j.at("branch_channels").get_to(spec.branch_channels);
  j.at("in_channels").get_to(spec.in_channels);
}

PrimeSieve::PrimeSieve(std::int64_t limit) : limit_(limit) {
  if (limit < 0) throw InvalidArgument("sieve limit must be nonnegative");
  composite_.assign(static_cast<std::size_t>(limit) + 1, false);
  for (std::int64_t i = 2; i <= limit; ++i) {
    if (composite_[i]) continue;
    primes_.push_back(i);
    for (std::int64_t j = i * i; j <= limit; j += i) composite_[j] = true;
  }
}

bool PrimeSieve::is_prime(std::int64_t n) const {
  if (n < 0 || n > limit_) throw InvalidArgument("value outside sieve range");
  return n >= 2 && !composite_[n];
}

bool is_prime(std::uint64_t n) {
  if (n < 2) return false;
  static constexpr std::uint64_t kBases[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};
  for (std::uint64_t p : kBases) {
    if (n % p == 0) return n == p;
  }
  std::uint64_t d = n - 1;
  int s = 0;
  while ((d & 1) == 0) {
    d >>= 1;
    ++s;
  }
  for (std::uint64_t a : kBases) {
    std::uint64_t x = pow_mod(a, d, n);
    if (x == 1 || x == n - 1) continue;
    bool witness = true;
    for (int r = 1; r < s; ++r) {
      x = mul_mod(x, x, n);
      if (x == n - 1) {
        witness = false;
        break;
      }
    }
    if (witness) return false;
  }
  return true;
}

std::vector<std::int64_t> primes_up_to(std::int64_t m) {
  if (m < 2) throw InvalidArgument("primes_up_to requires m >= 2");
  return PrimeSieve(m).primes();
}

KernelList prime_kernel_list(int max_prime) {
  if (max_prime < 2) throw InvalidArgument("max prime must be >= 2");
  KernelList list{1};
  for (std::int64_t p : primes_up_to(max_prime)) list.push_back(static_cast<int>(p));
  return list;
}

std::set<std::int64_t> coverage_set(const std::vector<KernelList>& layer_kernel_lists) {
  check_lists(layer_kernel_lists);
  const auto reach = reachable_offsets(layer_kernel_lists);
  std::set<std::int64_t> rfs;
  for (std::size_t o = 0; o < reach.size(); ++o) {
    if (reach[o]) rfs.insert(static_cast<std::int64_t>(o) + 1);
  }
  return rfs;
}

bool covers_all_up_to(const std::vector<KernelList>& layer_kernel_lists, std::int64_t rf) {
  check_lists(layer_kernel_lists);
  const auto reach = reachable_offsets(layer_kernel_lists);
  if (rf > static_cast<std::int64_t>(reach.size())) return false;
  return std::all_of(reach.begin(), reach.begin() + rf, [](char r) { return r != 0; });
}

int select_max_prime_for_rf(std::int64_t rf) {
  rf = std::max<std::int64_t>(rf, 1);
  if (rf > kGoldbachValidatedLimit) throw InvalidArgument("receptive field beyond validated range");
  // The canonical block with max prime M reaches at most RF 2M.
  for (std::int64_t m = std::max<std::int64_t>(2, (rf + 1) / 2);; ++m) {
    if (!is_prime(static_cast<std::uint64_t>(m))) continue;
    const auto spec = OSBlockSpec::canonical(static_cast<int>(m));
    if (covers_all_up_to(spec.layer_kernel_lists, rf)) return static_cast<int>(m);
  }
}

int select_max_prime(std::int64_t series_length) {
  if (series_length < 1) throw InvalidArgument("series length must be positive");
  if (series_length > kGoldbachValidatedLimit)
    throw InvalidArgument("series length beyond validated Goldbach range");
  return select_max_prime_for_rf((series_length + 1) / 2);
}

std::pair<std::int64_t, std::int64_t> goldbach_decompose(std::int64_t even) {
  if (even < 4 || even % 2 != 0) throw InvalidArgument("goldbach_decompose needs an even number >= 4");
  if (even > kGoldbachValidatedLimit) throw InvalidArgument("even number beyond validated range");
  for (std::int64_t p = 2; p <= even / 2; ++p) {
    if (is_prime(static_cast<std::uint64_t>(p)) && is_prime(static_cast<std::uint64_t>(even - p)))
      return {p, even - p};
  }
  throw std::logic_error("no Goldbach decomposition for " + std::to_string(even));
}

std::pair<std::int64_t, std::int64_t> goldbach_decompose(std::int64_t even, const PrimeSieve& sieve) {
  if (even < 4 || even % 2 != 0) throw InvalidArgument("goldbach_decompose needs an even number >= 4");
  if (even > sieve.limit()) throw InvalidArgument("even number outside sieve range");
  for (std::int64_t p : sieve.primes()) {
    if (p > even / 2) break;
    if (sieve.is_prime(even - p)) return {p, even - p};
  }
  throw std::logic_error("no Goldbach decomposition for " + std::to_string(even));
}

std::int64_t param_count_eq1(std::int64_t channels, std::int64_t rf, std::int64_t layers,
                             std::int64_t stride) {
  if (channels < 1 || rf < 1 || layers < 1 || stride < 1)
    throw InvalidArgument("param_count_eq1 arguments must be positive");
  return channels * (rf + (layers - 1) * stride);
}

CostBreakdown count_block_weights(const OSBlockSpec& spec) {
  spec.validate();
  CostBreakdown cost;
  std::int64_t in = spec.in_channels;
  for (const auto& list : spec.layer_kernel_lists) {
    const std::int64_t w = in * spec.branch_channels * kernel_sum(list);
    cost.per_layer_weights.push_back(w);
    cost.total_weights += w;
    in = static_cast<std::int64_t>(spec.branch_channels) * static_cast<std::int64_t>(list.size());
  }
  cost.max_rf = *coverage_set(spec.layer_kernel_lists).rbegin();
  return cost;
}

int largest_channels_within(std::int64_t budget, const std::function<std::int64_t(int)>& weights_at) {
  if (weights_at(1) > budget)
    throw InfeasibleBudget("weight budget " + std::to_string(budget) +
                           " is below the cost of one channel per branch (" +
                           std::to_string(weights_at(1)) + ")");
  int lo = 1;  // feasible
  int hi = 2;
  while (weights_at(hi) <= budget) {
    lo = hi;
    hi *= 2;
  }
  while (hi - lo > 1) {
    const int mid = lo + (hi - lo) / 2;
    (weights_at(mid) <= budget ? lo : hi) = mid;
  }
  return lo;
}

int allocate_channels(std::int64_t weight_budget, const std::vector<KernelList>& layer_kernel_lists,
                      int in_channels) {
  check_lists(layer_kernel_lists);
  return largest_channels_within(weight_budget, [&](int c) {
    return count_block_weights(OSBlockSpec{layer_kernel_lists, c, in_channels}).total_weights;
  });
}

SequenceComparison compare_sequences(std::int64_t rf) {
  if (rf < 2) throw InvalidArgument("compare_sequences requires R >= 2");
  SequenceComparison cmp;
  const auto primes = primes_up_to(rf);
  cmp.prime_sum = 1 + std::accumulate(primes.begin(), primes.end(), std::int64_t{0});
  cmp.arithmetic_sum = rf * (rf + 1) / 2;
  cmp.geometric_layers_needed = std::popcount(static_cast<std::uint64_t>(rf));
  return cmp;
}

void to_json(nlohmann::json& j, const SequenceComparison& cmp) {
  j = nlohmann::json{{"prime_sum", cmp.prime_sum},
                     {"arithmetic_sum", cmp.arithmetic_sum},
                     {"geometric_layers_needed", cmp.geometric_layers_needed}};
}

}  // namespace omniscale
