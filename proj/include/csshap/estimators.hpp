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

// Data valuation estimators.
//
// Exact oracles:
//   exact_shapley      - Shapley value of the dev-accuracy game, by full
//                        coalition enumeration.
//   exact_cs_shapley   - class-wise Shapley value: for every class y and every
//                        out-of-class environment E, the in-class Shapley value
//                        of the game S -> v_y(S | E), averaged over all E with
//                        equal weight.
// Samplers:
//   loo, tmc_shapley, beta_shapley, cs_shapley.
//
// Every sampler splits its work into units (one permutation, or one sampled
// environment) whose randomness is derived from (seed, unit index). Units may
// run on any number of workers; partial results are reduced in unit order,
// so outputs never depend on the worker count.

#ifndef CSSHAP_ESTIMATORS_HPP
#define CSSHAP_ESTIMATORS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "csshap/common.hpp"
#include "csshap/data.hpp"
#include "csshap/models.hpp"
#include "csshap/shapley.hpp"
#include "csshap/subset_cache.hpp"
#include "csshap/value_function.hpp"

namespace csshap {

enum class Normalization { kRescaleToInClassAccuracy, kMultiplyByInClassAccuracy, kNone };
enum class TruncationMetric { kClassValue, kAccuracy };

inline std::string to_string(Normalization n) {
  switch (n) {
    case Normalization::kRescaleToInClassAccuracy: return "rescale";
    case Normalization::kMultiplyByInClassAccuracy: return "multiply";
    case Normalization::kNone: return "none";
  }
  return "none";
}

inline std::string to_string(TruncationMetric m) {
  return m == TruncationMetric::kClassValue ? "class_value" : "accuracy";
}

struct EstimatorConfig {
  int permutations_per_environment = 5;
  int environments = 500;
  double truncation_tolerance = 1e-3;
  double beta_alpha = 16.0;
  double beta_beta = 1.0;
  // 0 means 10 * n.
  std::int64_t max_permutations = 0;
  double convergence_threshold = 0.05;
  int convergence_window = 100;
  int exact_cap = 12;
  int exact_class_cap = 10;
  Normalization normalization = Normalization::kRescaleToInClassAccuracy;
  TruncationMetric truncation_metric = TruncationMetric::kClassValue;

  void validate() const {
    if (permutations_per_environment < 1) throw Error("permutations_per_environment must be >= 1");
    if (environments < 1) throw Error("environments must be >= 1");
    if (!(truncation_tolerance >= 0.0)) throw Error("truncation_tolerance must be >= 0");
    if (!(beta_alpha > 0.0) || !(beta_beta > 0.0)) throw Error("beta_alpha and beta_beta must be > 0");
    if (max_permutations < 0) throw Error("max_permutations must be >= 0");
    if (!(convergence_threshold >= 0.0)) throw Error("convergence_threshold must be >= 0");
    if (convergence_window < 1) throw Error("convergence_window must be >= 1");
    if (exact_cap < 1 || exact_cap > kMaxEnumeratedPlayers) {
      throw Error("exact_cap must lie in [1, " + std::to_string(kMaxEnumeratedPlayers) + "]");
    }
    if (exact_class_cap < 1 || exact_class_cap > 16) throw Error("exact_class_cap must lie in [1, 16]");
  }

  bool operator==(const EstimatorConfig&) const = default;
};

inline nlohmann::ordered_json to_json(const EstimatorConfig& c) {
  return {{"permutations_per_environment", c.permutations_per_environment},
          {"environments", c.environments},
          {"truncation_tolerance", c.truncation_tolerance},
          {"beta_alpha", c.beta_alpha},
          {"beta_beta", c.beta_beta},
          {"max_permutations", c.max_permutations},
          {"convergence_threshold", c.convergence_threshold},
          {"convergence_window", c.convergence_window},
          {"exact_cap", c.exact_cap},
          {"exact_class_cap", c.exact_class_cap},
          {"normalization", to_string(c.normalization)},
          {"truncation_metric", to_string(c.truncation_metric)}};
}

// Reads the keys of `j` that belong to EstimatorConfig; any key not listed in
// `extra_keys` and not a config field is rejected.
inline EstimatorConfig estimator_config_from_json(const nlohmann::json& j,
                                                  std::span<const std::string> extra_keys = {}) {
  if (!j.is_object()) throw Error("estimator config must be a JSON object");
  EstimatorConfig c;
  for (const auto& [key, v] : j.items()) {
    if (std::find(extra_keys.begin(), extra_keys.end(), key) != extra_keys.end()) continue;
    if (key == "permutations_per_environment") c.permutations_per_environment = v.get<int>();
    else if (key == "environments") c.environments = v.get<int>();
    else if (key == "truncation_tolerance") c.truncation_tolerance = v.get<double>();
    else if (key == "beta_alpha") c.beta_alpha = v.get<double>();
    else if (key == "beta_beta") c.beta_beta = v.get<double>();
    else if (key == "max_permutations") c.max_permutations = v.get<std::int64_t>();
    else if (key == "convergence_threshold") c.convergence_threshold = v.get<double>();
    else if (key == "convergence_window") c.convergence_window = v.get<int>();
    else if (key == "exact_cap") c.exact_cap = v.get<int>();
    else if (key == "exact_class_cap") c.exact_class_cap = v.get<int>();
    else if (key == "normalization") {
      const auto s = v.get<std::string>();
      if (s == "rescale") c.normalization = Normalization::kRescaleToInClassAccuracy;
      else if (s == "multiply") c.normalization = Normalization::kMultiplyByInClassAccuracy;
      else if (s == "none") c.normalization = Normalization::kNone;
      else throw Error("unknown normalization '" + s + "'");
    } else if (key == "truncation_metric") {
      const auto s = v.get<std::string>();
      if (s == "class_value") c.truncation_metric = TruncationMetric::kClassValue;
      else if (s == "accuracy") c.truncation_metric = TruncationMetric::kAccuracy;
      else throw Error("unknown truncation_metric '" + s + "'");
    } else {
      throw Error("unknown estimator key '" + key + "'");
    }
  }
  c.validate();
  return c;
}

// Per-worker parallelism and optional memoization; neither affects results.
struct ExecutionOptions {
  int workers = 1;
  SubsetAccuracyCache* cache = nullptr;
};

struct ValuationBudget {
  std::int64_t permutations = 0;
  int environments = 0;
  int permutations_per_environment = 0;
  double truncation_tolerance = 0.0;
};

struct ValuationDiagnostics {
  // Marginal-contribution samples per instance (1 for exact methods).
  std::vector<std::int64_t> sample_counts;
  // Mean absolute relative change of the running value vector, one entry per
  // convergence check.
  std::vector<double> convergence_trace;
  std::int64_t utility_evaluations = 0;
  bool converged = false;
  std::vector<int> unscaled_classes;
  std::vector<std::string> notes;
};

struct ValuationResult {
  std::vector<InstanceId> instance_ids;
  std::vector<double> values;
  std::string method;
  ClassifierSpec classifier;
  ValueFunctionConfig value_function;
  std::uint64_t seed = 0;
  EstimatorConfig config;
  ValuationBudget budget;
  ValuationDiagnostics diagnostics;
};

namespace internal {

inline std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return rows;
}

inline void require_kind(const ValueFunctionConfig& vf, ValueFunctionKind kind,
                         const std::string& method) {
  vf.validate();
  if (vf.kind != kind) {
    throw Error(method + " requires the " + to_string(kind) + " value function");
  }
}

inline ValuationResult make_result(const LabeledDataset& train, std::string method,
                                   const ClassifierSpec& spec,
                                   const ValueFunctionConfig& vf,
                                   const EstimatorConfig& cfg, std::uint64_t seed) {
  ValuationResult r;
  r.instance_ids = train.instance_ids();
  r.values.assign(train.size(), 0.0);
  r.method = std::move(method);
  r.classifier = spec;
  r.value_function = vf;
  r.seed = seed;
  r.config = cfg;
  r.diagnostics.sample_counts.assign(train.size(), 1);
  return r;
}

inline double mean_relative_change(std::span<const double> now,
                                   std::span<const double> before) {
  double total = 0.0;
  for (std::size_t i = 0; i < now.size(); ++i) {
    total += std::abs(now[i] - before[i]) / (std::abs(now[i]) + 1e-12);
  }
  return now.empty() ? 0.0 : total / static_cast<double>(now.size());
}

inline constexpr std::uint64_t kTmcStream = 1;
inline constexpr std::uint64_t kCsStream = 3;

// Permutation sampling of a semivalue over all training rows. With
// `position_weights` empty every position has weight 1 (Shapley).
inline ValuationResult permutation_semivalue(
    const LabeledDataset& train, const LabeledDataset& dev, const ClassifierSpec& spec,
    const ValueFunctionConfig& vf, const EstimatorConfig& cfg, std::uint64_t seed,
    std::span<const double> position_weights, const ExecutionOptions& exec,
    std::string method) {
  const std::size_t n = train.size();
  if (n < 2) throw Error(method + " needs at least 2 training instances");
  const SubsetEvaluator eval(train, dev, spec, exec.cache);
  auto utility = [&](std::span<const std::size_t> rows) {
    return vf.scale * eval.accuracy(rows);
  };
  const auto everything = all_rows(n);
  const double full = utility(everything);
  const double empty = utility({});

  ValuationResult result = make_result(train, std::move(method), spec, vf, cfg, seed);
  const std::int64_t max_perms =
      cfg.max_permutations > 0 ? cfg.max_permutations : static_cast<std::int64_t>(10 * n);
  std::vector<double> sums(n, 0.0), means(n, 0.0), previous;
  std::int64_t done = 0;
  std::int64_t evaluations = 2;
  while (done < max_perms) {
    const auto batch = static_cast<std::size_t>(
        std::min<std::int64_t>(cfg.convergence_window, max_perms - done));
    std::vector<std::vector<double>> slots(batch, std::vector<double>(n));
    std::vector<std::size_t> unit_evals(batch);
    parallel_for(batch, exec.workers, [&](std::size_t b) {
      auto rng = unit_rng(seed, kTmcStream, static_cast<std::uint64_t>(done) + b);
      std::vector<std::size_t> order = everything;
      std::shuffle(order.begin(), order.end(), rng);
      unit_evals[b] = walk_permutation(order, utility, empty, full,
                                       cfg.truncation_tolerance, slots[b]);
      if (!position_weights.empty()) {
        for (std::size_t j = 0; j < n; ++j) slots[b][order[j]] *= position_weights[j];
      }
    });
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t i = 0; i < n; ++i) sums[i] += slots[b][i];
      evaluations += static_cast<std::int64_t>(unit_evals[b]);
    }
    done += static_cast<std::int64_t>(batch);
    for (std::size_t i = 0; i < n; ++i) means[i] = sums[i] / static_cast<double>(done);
    if (!previous.empty() && batch == static_cast<std::size_t>(cfg.convergence_window)) {
      const double change = mean_relative_change(means, previous);
      result.diagnostics.convergence_trace.push_back(change);
      if (change < cfg.convergence_threshold) {
        result.diagnostics.converged = true;
        break;
      }
    }
    previous = means;
  }
  result.values = means;
  result.diagnostics.sample_counts.assign(n, done);
  result.diagnostics.utility_evaluations = evaluations;
  result.budget = {done, 0, 0, cfg.truncation_tolerance};
  return result;
}

}  // namespace internal

struct NormalizedValues {
  std::vector<double> values;
  std::vector<int> unscaled_classes;
};

// Per-class normalization against the in-class accuracy a_T(D_y) of a model
// trained on the whole training set. `kRescaleToInClassAccuracy` scales class
// y so its values sum to a_T(D_y); a class whose sum is exactly zero is left
// unscaled and reported.
inline NormalizedValues normalize_per_class(std::span<const double> values,
                                            const SubsetEvaluator& eval,
                                            Normalization mode) {
  const LabeledDataset& train = eval.train();
  if (values.size() != train.size()) throw Error("values are not aligned with train");
  NormalizedValues out{std::vector<double>(values.begin(), values.end()), {}};
  if (mode == Normalization::kNone) return out;
  const auto counts = eval.correct_counts(internal::all_rows(train.size()));
  for (int y = 0; y < train.class_count(); ++y) {
    const double target = AccuracyPair::from_class_counts(counts, eval.dev_size(), y).in_class;
    double class_sum = 0.0;
    bool present = false;
    for (std::size_t i = 0; i < train.size(); ++i) {
      if (train.label(i) != y) continue;
      class_sum += values[i];
      present = true;
    }
    if (!present) continue;
    double factor = target;
    if (mode == Normalization::kRescaleToInClassAccuracy) {
      if (class_sum == 0.0) {
        out.unscaled_classes.push_back(y);
        continue;
      }
      factor = target / class_sum;
    }
    for (std::size_t i = 0; i < train.size(); ++i) {
      if (train.label(i) == y) out.values[i] *= factor;
    }
  }
  return out;
}

inline NormalizedValues normalize_per_class(std::span<const double> values,
                                            const LabeledDataset& train,
                                            const LabeledDataset& dev,
                                            const ClassifierSpec& classifier,
                                            Normalization mode = Normalization::kRescaleToInClassAccuracy) {
  const SubsetEvaluator eval(train, dev, classifier);
  return normalize_per_class(values, eval, mode);
}

inline ValuationResult exact_shapley(const LabeledDataset& train, const LabeledDataset& dev,
                                     const ClassifierSpec& spec,
                                     const ValueFunctionConfig& vf = ValueFunctionConfig::overall_accuracy(),
                                     const EstimatorConfig& cfg = {},
                                     const ExecutionOptions& exec = {}) {
  internal::require_kind(vf, ValueFunctionKind::kOverallAccuracy, "exact_shapley");
  cfg.validate();
  const int n = static_cast<int>(train.size());
  if (n > cfg.exact_cap) {
    throw Error("exact_shapley: " + std::to_string(n) + " instances exceed the cap of " +
                std::to_string(cfg.exact_cap));
  }
  const SubsetEvaluator eval(train, dev, spec, exec.cache);
  std::vector<double> table(Coalition{1} << n);
  parallel_for(table.size(), exec.workers, [&](std::size_t mask) {
    std::vector<std::size_t> rows;
    for (int i = 0; i < n; ++i) {
      if (mask & (Coalition{1} << i)) rows.push_back(static_cast<std::size_t>(i));
    }
    table[mask] = vf.scale * eval.accuracy(rows);
  });
  ValuationResult result = internal::make_result(train, "exact_shapley", spec, vf, cfg, 0);
  result.values = exact_shapley_from_table(n, table);
  result.diagnostics.utility_evaluations = static_cast<std::int64_t>(table.size());
  result.diagnostics.converged = true;
  return result;
}

inline ValuationResult exact_cs_shapley(const LabeledDataset& train, const LabeledDataset& dev,
                                        const ClassifierSpec& spec,
                                        const ValueFunctionConfig& vf = {},
                                        const EstimatorConfig& cfg = {},
                                        const ExecutionOptions& exec = {}) {
  internal::require_kind(vf, ValueFunctionKind::kClasswise, "exact_cs_shapley");
  cfg.validate();
  const SubsetEvaluator eval(train, dev, spec, exec.cache);
  ValuationResult result = internal::make_result(train, "exact_cs_shapley", spec, vf, cfg, 0);
  std::int64_t evaluations = 0;
  for (int y = 0; y < train.class_count(); ++y) {
    const ClassPartition part = partition_by_class(train, y);
    const int m_in = static_cast<int>(part.in_class.size());
    const int m_out = static_cast<int>(part.out_of_class.size());
    if (m_in == 0) continue;
    if (m_in > cfg.exact_class_cap || m_out > cfg.exact_class_cap) {
      throw Error("exact_cs_shapley: class " + std::to_string(y) + " partition (" +
                  std::to_string(m_in) + " in-class, " + std::to_string(m_out) +
                  " out-of-class) exceeds the cap of " + std::to_string(cfg.exact_class_cap));
    }
    const std::size_t environments = std::size_t{1} << m_out;
    std::vector<std::vector<double>> slots(environments);
    parallel_for(environments, exec.workers, [&](std::size_t env) {
      std::vector<std::size_t> env_rows;
      for (int o = 0; o < m_out; ++o) {
        if (env & (std::size_t{1} << o)) env_rows.push_back(part.out_of_class[o]);
      }
      slots[env] = exact_shapley_values(m_in, [&](Coalition mask) {
        std::vector<std::size_t> rows = env_rows;
        for (int i = 0; i < m_in; ++i) {
          if (mask & (Coalition{1} << i)) rows.push_back(part.in_class[i]);
        }
        return cs_value(eval.class_pair(rows, y), vf);
      });
    });
    std::vector<double> sums(m_in, 0.0);
    for (const auto& slot : slots) {
      for (int i = 0; i < m_in; ++i) sums[i] += slot[i];
    }
    for (int i = 0; i < m_in; ++i) {
      result.values[part.in_class[i]] = sums[i] / static_cast<double>(environments);
    }
    evaluations += static_cast<std::int64_t>(environments) << m_in;
  }
  auto normalized = normalize_per_class(result.values, eval, cfg.normalization);
  result.values = std::move(normalized.values);
  result.diagnostics.unscaled_classes = std::move(normalized.unscaled_classes);
  result.diagnostics.utility_evaluations = evaluations;
  result.diagnostics.converged = true;
  return result;
}

// value_i = v(T) - v(T \ {i}) under overall dev accuracy.
inline ValuationResult loo(const LabeledDataset& train, const LabeledDataset& dev,
                           const ClassifierSpec& spec,
                           const ValueFunctionConfig& vf = ValueFunctionConfig::overall_accuracy(),
                           const ExecutionOptions& exec = {}) {
  internal::require_kind(vf, ValueFunctionKind::kOverallAccuracy, "loo");
  const std::size_t n = train.size();
  if (n < 2) throw Error("loo needs at least 2 training instances");
  const SubsetEvaluator eval(train, dev, spec, exec.cache);
  const auto everything = internal::all_rows(n);
  const double full = vf.scale * eval.accuracy(everything);
  ValuationResult result = internal::make_result(train, "loo", spec, vf, {}, 0);
  parallel_for(n, exec.workers, [&](std::size_t i) {
    std::vector<std::size_t> rows;
    rows.reserve(n - 1);
    for (std::size_t r = 0; r < n; ++r) {
      if (r != i) rows.push_back(r);
    }
    result.values[i] = full - vf.scale * eval.accuracy(rows);
  });
  result.diagnostics.utility_evaluations = static_cast<std::int64_t>(n + 1);
  result.diagnostics.converged = true;
  return result;
}

// Truncated Monte Carlo Shapley: uniformly random permutations, walks cut
// short once the prefix accuracy is within the tolerance of the full-set
// accuracy; stops at max_permutations or when the running values settle.
inline ValuationResult tmc_shapley(const LabeledDataset& train, const LabeledDataset& dev,
                                   const ClassifierSpec& spec,
                                   const ValueFunctionConfig& vf = ValueFunctionConfig::overall_accuracy(),
                                   const EstimatorConfig& cfg = {}, std::uint64_t seed = 0,
                                   const ExecutionOptions& exec = {}) {
  internal::require_kind(vf, ValueFunctionKind::kOverallAccuracy, "tmc_shapley");
  cfg.validate();
  return internal::permutation_semivalue(train, dev, spec, vf, cfg, seed, {}, exec,
                                         "tmc_shapley");
}

// Beta(alpha, beta) semivalue by permutation sampling: the marginal observed at
// position j is weighted by the normalized Beta cardinality profile. Uses the
// same permutation stream as tmc_shapley, so alpha = beta = 1 reproduces it.
inline ValuationResult beta_shapley(const LabeledDataset& train, const LabeledDataset& dev,
                                    const ClassifierSpec& spec,
                                    const ValueFunctionConfig& vf = ValueFunctionConfig::overall_accuracy(),
                                    const EstimatorConfig& cfg = {}, std::uint64_t seed = 0,
                                    const ExecutionOptions& exec = {}) {
  internal::require_kind(vf, ValueFunctionKind::kOverallAccuracy, "beta_shapley");
  cfg.validate();
  const auto weights = beta_position_weights(static_cast<int>(train.size()),
                                             cfg.beta_alpha, cfg.beta_beta);
  auto result = internal::permutation_semivalue(train, dev, spec, vf, cfg, seed, weights,
                                                exec, "beta_shapley");
  const EstimatorConfig defaults;
  if (cfg.beta_alpha == defaults.beta_alpha && cfg.beta_beta == defaults.beta_beta) {
    result.diagnostics.notes.push_back(
        "beta_alpha=16, beta_beta=1 are external defaults recommended by the Beta "
        "Shapley authors");
  }
  return result;
}

// Class-wise Shapley by sampling. For each class y, K environments are drawn
// by keeping each out-of-class instance with probability 1/2; within each
// environment P truncated permutation walks over the in-class instances
// estimate the conditional in-class Shapley values under
// v_y = a_S(D_y) * basis^{a_S(D_-y)}. The K conditional estimates are averaged
// and the class is then normalized per cfg.normalization.
inline ValuationResult cs_shapley(const LabeledDataset& train, const LabeledDataset& dev,
                                  const ClassifierSpec& spec,
                                  const ValueFunctionConfig& vf = {},
                                  const EstimatorConfig& cfg = {}, std::uint64_t seed = 0,
                                  const ExecutionOptions& exec = {}) {
  internal::require_kind(vf, ValueFunctionKind::kClasswise, "cs_shapley");
  cfg.validate();
  if (train.size() < 2) throw Error("cs_shapley needs at least 2 training instances");
  const auto class_sizes = train.class_counts();
  for (int y = 0; y < train.class_count(); ++y) {
    if (class_sizes[y] == 0) {
      throw Error("cs_shapley: class " + std::to_string(y) + " has no training instances");
    }
  }
  const SubsetEvaluator eval(train, dev, spec, exec.cache);
  ValuationResult result = internal::make_result(train, "cs_shapley", spec, vf, cfg, seed);
  const auto K = static_cast<std::size_t>(cfg.environments);
  const auto P = static_cast<std::size_t>(cfg.permutations_per_environment);
  std::int64_t evaluations = 0;

  for (int y = 0; y < train.class_count(); ++y) {
    const ClassPartition part = partition_by_class(train, y);
    const std::size_t m = part.in_class.size();
    std::vector<std::vector<double>> slots(K, std::vector<double>(m, 0.0));
    std::vector<std::size_t> unit_evals(K, 0);

    parallel_for(K, exec.workers, [&](std::size_t k) {
      auto rng = unit_rng(seed, internal::kCsStream,
                          (static_cast<std::uint64_t>(y) << 32) | k);
      std::vector<std::size_t> env;
      for (std::size_t r : part.out_of_class) {
        if (rng() >> 63) env.push_back(r);
      }
      auto point = [&](std::span<const std::size_t> in_positions) {
        std::vector<std::size_t> rows = env;
        for (std::size_t p : in_positions) rows.push_back(part.in_class[p]);
        const AccuracyPair acc = eval.class_pair(rows, y);
        const double value = cs_value(acc, vf);
        return WalkPoint{value, cfg.truncation_metric == TruncationMetric::kClassValue
                                    ? value
                                    : acc.overall()};
      };
      std::vector<std::size_t> order(m);
      std::iota(order.begin(), order.end(), std::size_t{0});
      const WalkPoint empty = point({});
      const WalkPoint full = point(order);
      std::size_t evals = 2;
      std::vector<double> marginal(m);
      for (std::size_t p = 0; p < P; ++p) {
        std::shuffle(order.begin(), order.end(), rng);
        evals += walk_permutation_tracked(order, point, empty, full.progress,
                                          cfg.truncation_tolerance, marginal);
        for (std::size_t i = 0; i < m; ++i) slots[k][i] += marginal[i];
      }
      for (double& v : slots[k]) v /= static_cast<double>(P);
      unit_evals[k] = evals;
    });

    std::vector<double> sums(m, 0.0), means(m, 0.0), previous;
    for (std::size_t k = 0; k < K; ++k) {
      for (std::size_t i = 0; i < m; ++i) sums[i] += slots[k][i];
      evaluations += static_cast<std::int64_t>(unit_evals[k]);
      for (std::size_t i = 0; i < m; ++i) means[i] = sums[i] / static_cast<double>(k + 1);
      if (!previous.empty()) {
        result.diagnostics.convergence_trace.push_back(
            internal::mean_relative_change(means, previous));
      }
      previous = means;
    }
    for (std::size_t i = 0; i < m; ++i) result.values[part.in_class[i]] = means[i];
  }

  auto normalized = normalize_per_class(result.values, eval, cfg.normalization);
  result.values = std::move(normalized.values);
  result.diagnostics.unscaled_classes = std::move(normalized.unscaled_classes);
  result.diagnostics.sample_counts.assign(train.size(), static_cast<std::int64_t>(K * P));
  result.diagnostics.utility_evaluations = evaluations;
  result.diagnostics.converged = true;
  result.budget = {static_cast<std::int64_t>(K * P), cfg.environments,
                   cfg.permutations_per_environment, cfg.truncation_tolerance};
  return result;
}

// Uniform random values; the reference ordering for removal experiments.
inline ValuationResult random_values(const LabeledDataset& train, const ClassifierSpec& spec,
                                     std::uint64_t seed) {
  ValuationResult result = internal::make_result(
      train, "random", spec, ValueFunctionConfig::overall_accuracy(), {}, seed);
  auto rng = unit_rng(seed, 0xa11d, 0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  for (double& v : result.values) v = uniform(rng);
  return result;
}

inline const std::vector<std::string>& valuation_methods() {
  static const std::vector<std::string> kMethods = {
      "exact_shapley", "exact_cs_shapley", "loo", "tmc_shapley",
      "beta_shapley",  "cs_shapley",       "random"};
  return kMethods;
}

inline ValueFunctionConfig default_value_function(const std::string& method) {
  if (method == "cs_shapley" || method == "exact_cs_shapley") return {};
  return ValueFunctionConfig::overall_accuracy();
}

// Dispatches by method name.
inline ValuationResult run_valuation(const std::string& method, const LabeledDataset& train,
                                     const LabeledDataset& dev, const ClassifierSpec& spec,
                                     const ValueFunctionConfig& vf, const EstimatorConfig& cfg,
                                     std::uint64_t seed, const ExecutionOptions& exec = {}) {
  if (method == "exact_shapley") return exact_shapley(train, dev, spec, vf, cfg, exec);
  if (method == "exact_cs_shapley") return exact_cs_shapley(train, dev, spec, vf, cfg, exec);
  if (method == "loo") return loo(train, dev, spec, vf, exec);
  if (method == "tmc_shapley") return tmc_shapley(train, dev, spec, vf, cfg, seed, exec);
  if (method == "beta_shapley") return beta_shapley(train, dev, spec, vf, cfg, seed, exec);
  if (method == "cs_shapley") return cs_shapley(train, dev, spec, vf, cfg, seed, exec);
  if (method == "random") return random_values(train, spec, seed);
  throw Error("unknown valuation method '" + method + "'");
}

inline nlohmann::ordered_json to_json(const ValuationResult& r) {
  nlohmann::ordered_json values = nlohmann::ordered_json::object();
  nlohmann::ordered_json counts = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < r.values.size(); ++i) {
    values[std::to_string(r.instance_ids[i])] = r.values[i];
    counts[std::to_string(r.instance_ids[i])] = r.diagnostics.sample_counts[i];
  }
  return {{"method", r.method},
          {"seed", r.seed},
          {"classifier", to_json(r.classifier)},
          {"value_function", to_json(r.value_function)},
          {"estimator", to_json(r.config)},
          {"budget",
           {{"permutations", r.budget.permutations},
            {"environments", r.budget.environments},
            {"permutations_per_environment", r.budget.permutations_per_environment},
            {"truncation_tolerance", r.budget.truncation_tolerance}}},
          {"values", std::move(values)},
          {"diagnostics",
           {{"sample_counts", std::move(counts)},
            {"convergence_trace", r.diagnostics.convergence_trace},
            {"utility_evaluations", r.diagnostics.utility_evaluations},
            {"converged", r.diagnostics.converged},
            {"unscaled_classes", r.diagnostics.unscaled_classes},
            {"notes", r.diagnostics.notes}}}};
}

// Reads back what to_json wrote. Values keep file order.
inline ValuationResult valuation_result_from_json(const nlohmann::ordered_json& j) {
  ValuationResult r;
  try {
    r.method = j.at("method").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.classifier = classifier_spec_from_json(nlohmann::json::parse(j.at("classifier").dump()));
    r.value_function = value_function_from_json(nlohmann::json::parse(j.at("value_function").dump()));
    r.config = estimator_config_from_json(nlohmann::json::parse(j.at("estimator").dump()));
    const auto& b = j.at("budget");
    r.budget = {b.at("permutations").get<std::int64_t>(), b.at("environments").get<int>(),
                b.at("permutations_per_environment").get<int>(),
                b.at("truncation_tolerance").get<double>()};
    for (const auto& [key, value] : j.at("values").items()) {
      r.instance_ids.push_back(std::stoull(key));
      r.values.push_back(value.get<double>());
    }
    const auto& d = j.at("diagnostics");
    for (const auto& [key, value] : d.at("sample_counts").items()) {
      r.diagnostics.sample_counts.push_back(value.get<std::int64_t>());
    }
    r.diagnostics.convergence_trace = d.at("convergence_trace").get<std::vector<double>>();
    r.diagnostics.utility_evaluations = d.at("utility_evaluations").get<std::int64_t>();
    r.diagnostics.converged = d.at("converged").get<bool>();
    r.diagnostics.unscaled_classes = d.at("unscaled_classes").get<std::vector<int>>();
    r.diagnostics.notes = d.at("notes").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed valuation result: ") + e.what());
  } catch (const std::logic_error& e) {
    throw Error(std::string("malformed valuation result: ") + e.what());
  }
  return r;
}

}  // namespace csshap

#endif  // CSSHAP_ESTIMATORS_HPP
