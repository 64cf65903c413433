/*
 * Copyright 2026 The csshap Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Game-theoretic building blocks independent of any learner: exact
// semivalues by coalition enumeration, cardinality weight profiles, and the
// truncated permutation walk used by every sampling estimator.

#ifndef CSSHAP_SHAPLEY_HPP
#define CSSHAP_SHAPLEY_HPP

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "csshap/common.hpp"

namespace csshap {

// Bit i set <=> player i is in the coalition.
using Coalition = std::uint64_t;

inline constexpr int kMaxEnumeratedPlayers = 24;

inline double log_binomial(int n, int k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

// Weight of one coalition of size s (s = 0..n-1) in the Shapley value:
// s! (n-s-1)! / n!.
inline std::vector<double> shapley_coalition_weights(int n) {
  std::vector<double> w(n);
  for (int s = 0; s < n; ++s) w[s] = std::exp(-std::log(n) - log_binomial(n - 1, s));
  return w;
}

// Beta(alpha, beta) cardinality profile over the position j = 0..n-1 at which
// a player joins a uniformly random permutation (j = size of the coalition it
// joins). The profile sums to n; alpha = beta = 1 gives all ones, i.e. the
// Shapley value.
inline std::vector<double> beta_position_weights(int n, double alpha, double beta) {
  if (!(alpha > 0.0) || !(beta > 0.0)) throw Error("Beta parameters must be > 0");
  std::vector<double> w(n);
  const double log_norm = std::lgamma(alpha) + std::lgamma(beta) - std::lgamma(alpha + beta);
  for (int j = 0; j < n; ++j) {
    const double log_beta_fn = std::lgamma(j + beta) + std::lgamma(n - 1 - j + alpha) -
                               std::lgamma(n - 1 + alpha + beta);
    w[j] = n * std::exp(log_binomial(n - 1, j) + log_beta_fn - log_norm);
  }
  return w;
}

// Converts a per-position profile into per-coalition weights.
inline std::vector<double> coalition_weights_from_positions(std::span<const double> position) {
  const int n = static_cast<int>(position.size());
  auto w = shapley_coalition_weights(n);
  for (int s = 0; s < n; ++s) w[s] *= position[s];
  return w;
}

template <class Utility>
std::vector<double> utility_table(int n, Utility&& utility) {
  if (n < 0 || n > kMaxEnumeratedPlayers) throw Error("too many players to enumerate");
  std::vector<double> table(Coalition{1} << n);
  for (Coalition mask = 0; mask < table.size(); ++mask) table[mask] = utility(mask);
  return table;
}

// Semivalue sum_{S not containing i} weight[|S|] * (v(S+i) - v(S)).
// Marginal contributions are grouped by coalition size and each group is
// summed in sorted order, so two players with identical marginal multisets
// (symmetric players) receive bit-identical values, and a null player gets
// exactly zero.
inline std::vector<double> exact_semivalue_from_table(
    int n, std::span<const double> table, std::span<const double> coalition_weight) {
  if (table.size() != (std::size_t{1} << n)) throw Error("utility table size mismatch");
  if (coalition_weight.size() != static_cast<std::size_t>(n)) {
    throw Error("need one coalition weight per size");
  }
  std::vector<double> values(n, 0.0);
  std::vector<std::vector<double>> buckets(n);
  for (int i = 0; i < n; ++i) {
    for (auto& b : buckets) b.clear();
    const Coalition bit = Coalition{1} << i;
    for (Coalition mask = 0; mask < table.size(); ++mask) {
      if (mask & bit) continue;
      buckets[std::popcount(mask)].push_back(table[mask | bit] - table[mask]);
    }
    double phi = 0.0;
    for (int s = 0; s < n; ++s) {
      auto& b = buckets[s];
      std::sort(b.begin(), b.end());
      double sum = 0.0;
      for (double m : b) sum += m;
      phi += coalition_weight[s] * sum;
    }
    values[i] = phi;
  }
  return values;
}

inline std::vector<double> exact_shapley_from_table(int n, std::span<const double> table) {
  return exact_semivalue_from_table(n, table, shapley_coalition_weights(n));
}

template <class Utility>
std::vector<double> exact_shapley_values(int n, Utility&& utility) {
  const auto table = utility_table(n, utility);
  return exact_shapley_from_table(n, table);
}

// Utility of a coalition plus the quantity the truncation rule watches.
struct WalkPoint {
  double value = 0.0;
  double progress = 0.0;
};

// Walks one permutation of players, writing each player's marginal
// contribution into marginal[player]. `utility` receives the current prefix
// and returns a WalkPoint. Once the prefix progress is within `tolerance` of
// `full_progress` the walk stops and the remaining players get a zero
// marginal. Returns the number of utility evaluations performed.
template <class Utility>
std::size_t walk_permutation_tracked(std::span<const std::size_t> order,
                                     Utility&& utility, WalkPoint empty,
                                     double full_progress, double tolerance,
                                     std::span<double> marginal) {
  std::vector<std::size_t> prefix;
  prefix.reserve(order.size());
  WalkPoint previous = empty;
  std::size_t evaluations = 0;
  std::size_t j = 0;
  for (; j < order.size(); ++j) {
    if (std::abs(full_progress - previous.progress) < tolerance) break;
    prefix.push_back(order[j]);
    const WalkPoint current = utility(std::span<const std::size_t>(prefix));
    ++evaluations;
    marginal[order[j]] = current.value - previous.value;
    previous = current;
  }
  for (; j < order.size(); ++j) marginal[order[j]] = 0.0;
  return evaluations;
}

// Same walk where the truncation rule watches the utility itself.
template <class Utility>
std::size_t walk_permutation(std::span<const std::size_t> order, Utility&& utility,
                             double empty_value, double full_value, double tolerance,
                             std::span<double> marginal) {
  return walk_permutation_tracked(
      order,
      [&utility](std::span<const std::size_t> prefix) {
        const double v = utility(prefix);
        return WalkPoint{v, v};
      },
      WalkPoint{empty_value, empty_value}, full_value, tolerance, marginal);
}

}  // namespace csshap

#endif  // CSSHAP_SHAPLEY_HPP
