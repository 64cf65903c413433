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

// Experiment manifests and the commands behind the csshap tool. A manifest
// fully determines an experiment: the same manifest (and seed override)
// always yields byte-identical output files, whatever the worker count or
// cache setting.

#ifndef CSSHAP_EXPERIMENT_HPP
#define CSSHAP_EXPERIMENT_HPP

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "csshap/common.hpp"
#include "csshap/data.hpp"
#include "csshap/estimators.hpp"
#include "csshap/evaluation.hpp"
#include "csshap/models.hpp"
#include "csshap/subset_cache.hpp"
#include "csshap/value_function.hpp"

namespace csshap {

inline constexpr const char* kCacheDirEnv = "CSSHAP_CACHE_DIR";

struct DatasetConfig {
  std::filesystem::path path;
  LabelColumn label_column = std::string("label");
  bool has_header = true;
  std::array<double, 3> split = {0.5, 0.25, 0.25};
  std::uint64_t seed = 0;
  bool standardize = false;
};

struct EvaluationConfig {
  std::size_t step = 1;
  double cap = 0.5;
  double noise_fraction = 0.2;
  std::optional<std::uint64_t> noise_seed;
  // "test" (default) or "dev".
  std::string eval_split = "test";
  std::vector<ClassifierSpec> targets;
};

struct ExperimentManifest {
  DatasetConfig dataset;
  ClassifierSpec classifier;
  std::string method = "cs_shapley";
  std::uint64_t seed = 0;
  ValueFunctionConfig value_function;
  EstimatorConfig estimator;
  EvaluationConfig evaluation;
  std::filesystem::path output_dir = "out";
  // SHA-256 of the canonical manifest, output_dir excluded.
  std::string digest;
};

struct RunOptions {
  std::optional<std::uint64_t> seed;
  int workers = 1;
  std::optional<std::filesystem::path> cache_dir;
  std::optional<std::filesystem::path> out;
  std::ostream* log = nullptr;
};

namespace internal {

inline void reject_unknown(const nlohmann::json& j, const std::string& where,
                           std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw Error("manifest: '" + where + "' must be an object");
  for (const auto& [key, _] : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(),
                     [&key](const char* a) { return key == a; })) {
      throw Error("manifest: unknown key '" + key + "' in " + where);
    }
  }
}

inline void write_text(const std::filesystem::path& file, const std::string& text) {
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary);
  if (!out) throw Error("cannot write '" + file.string() + "'");
  out << text;
}

inline std::string dump(const nlohmann::ordered_json& j) { return j.dump(2) + "\n"; }

}  // namespace internal

// Strict parse: unknown keys anywhere are schema errors. Relative dataset
// paths resolve against `base_dir`.
inline ExperimentManifest parse_manifest(nlohmann::json j,
                                         const std::filesystem::path& base_dir = {},
                                         std::optional<std::uint64_t> seed_override = {}) {
  ExperimentManifest m;
  try {
    internal::reject_unknown(j, "manifest",
                             {"dataset", "classifier", "value_function", "estimator",
                              "evaluation", "output_dir"});
    for (const char* required : {"dataset", "classifier", "estimator"}) {
      if (!j.contains(required)) {
        throw Error(std::string("manifest: missing required key '") + required + "'");
      }
    }

    const auto& d = j["dataset"];
    internal::reject_unknown(d, "dataset",
                             {"path", "label_column", "has_header", "split", "seed", "standardize"});
    if (!d.contains("path")) throw Error("manifest: dataset.path is required");
    m.dataset.path = d["path"].get<std::string>();
    if (m.dataset.path.is_relative() && !base_dir.empty()) m.dataset.path = base_dir / m.dataset.path;
    if (d.contains("label_column")) {
      const auto& lc = d["label_column"];
      if (lc.is_string()) m.dataset.label_column = lc.get<std::string>();
      else if (lc.is_number_unsigned()) m.dataset.label_column = lc.get<std::size_t>();
      else throw Error("manifest: dataset.label_column must be a name or a column index");
    }
    m.dataset.has_header = d.value("has_header", true);
    if (d.contains("split")) {
      const auto split = d["split"].get<std::vector<double>>();
      if (split.size() != 3) throw Error("manifest: dataset.split needs three fractions");
      std::copy(split.begin(), split.end(), m.dataset.split.begin());
    }
    m.dataset.seed = d.value("seed", std::uint64_t{0});
    m.dataset.standardize = d.value("standardize", false);

    m.classifier = classifier_spec_from_json(j["classifier"]);

    const auto& e = j["estimator"];
    if (!e.is_object()) throw Error("manifest: 'estimator' must be an object");
    m.method = e.value("method", std::string("cs_shapley"));
    if (m.method == "exact") m.method = "exact_shapley";
    const auto& methods = valuation_methods();
    if (std::find(methods.begin(), methods.end(), m.method) == methods.end()) {
      throw Error("manifest: unknown estimator.method '" + m.method + "'");
    }
    m.seed = e.value("seed", std::uint64_t{0});
    static const std::vector<std::string> kExtra = {"method", "seed"};
    m.estimator = estimator_config_from_json(e, kExtra);

    m.value_function = j.contains("value_function")
                           ? value_function_from_json(j["value_function"])
                           : default_value_function(m.method);

    if (j.contains("evaluation")) {
      const auto& ev = j["evaluation"];
      internal::reject_unknown(ev, "evaluation",
                               {"step", "cap", "noise_fraction", "noise_seed", "eval_split",
                                "targets"});
      m.evaluation.step = ev.value("step", std::size_t{1});
      m.evaluation.cap = ev.value("cap", 0.5);
      m.evaluation.noise_fraction = ev.value("noise_fraction", 0.2);
      if (ev.contains("noise_seed")) m.evaluation.noise_seed = ev["noise_seed"].get<std::uint64_t>();
      m.evaluation.eval_split = ev.value("eval_split", std::string("test"));
      if (m.evaluation.eval_split != "test" && m.evaluation.eval_split != "dev") {
        throw Error("manifest: evaluation.eval_split must be 'test' or 'dev'");
      }
      if (ev.contains("targets")) {
        for (const auto& t : ev["targets"]) m.evaluation.targets.push_back(classifier_spec_from_json(t));
      }
    }
    if (j.contains("output_dir")) m.output_dir = j["output_dir"].get<std::string>();
  } catch (const nlohmann::json::exception& ex) {
    throw Error(std::string("manifest schema error: ") + ex.what());
  }

  if (seed_override) {
    m.seed = *seed_override;
    j["estimator"]["seed"] = *seed_override;
  }
  j.erase("output_dir");
  m.digest = sha256_hex(j.dump());
  return m;
}

inline ExperimentManifest load_manifest(const std::filesystem::path& file,
                                        std::optional<std::uint64_t> seed_override = {}) {
  std::ifstream in(file);
  if (!in) throw Error("cannot open manifest '" + file.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& ex) {
    throw Error("manifest '" + file.string() + "' is not valid JSON: " + ex.what());
  }
  return parse_manifest(std::move(j), file.parent_path(), seed_override);
}

// Loaded and split data for one manifest.
struct ExperimentData {
  DatasetSplit split;
  const LabeledDataset& eval_set(const EvaluationConfig& cfg) const {
    return cfg.eval_split == "dev" ? split.dev : split.test;
  }
};

inline ExperimentData load_experiment_data(const ExperimentManifest& m) {
  const LabeledDataset all =
      load_csv(m.dataset.path.string(), m.dataset.label_column, m.dataset.has_header);
  ExperimentData data{stratified_split(all, m.dataset.split, m.dataset.seed)};
  if (m.dataset.standardize) {
    const auto scaler = Standardizer::fit(data.split.train);
    data.split.train = scaler.apply(data.split.train);
    data.split.dev = scaler.apply(data.split.dev);
    data.split.test = scaler.apply(data.split.test);
  }
  return data;
}

inline std::optional<std::filesystem::path> resolve_cache_dir(const RunOptions& opts) {
  if (opts.cache_dir) return opts.cache_dir;
  if (const char* env = std::getenv(kCacheDirEnv); env != nullptr && *env != '\0') {
    return std::filesystem::path(env);
  }
  return std::nullopt;
}

// Runs a valuation with optional on-disk memoization of subset accuracies.
inline ValuationResult value_with_cache(const ExperimentManifest& m, const LabeledDataset& train,
                                        const LabeledDataset& dev, const RunOptions& opts) {
  ExecutionOptions exec{opts.workers, nullptr};
  std::unique_ptr<SubsetAccuracyCache> cache;
  std::filesystem::path cache_file;
  if (auto dir = resolve_cache_dir(opts)) {
    const auto context = cache_context_digest(train, dev, m.classifier);
    cache = std::make_unique<SubsetAccuracyCache>(context);
    cache_file = *dir / (context + ".json");
    cache->load(cache_file);
    exec.cache = cache.get();
  }
  auto result = run_valuation(m.method, train, dev, m.classifier, m.value_function, m.estimator,
                              m.seed, exec);
  if (cache) cache->save(cache_file);
  return result;
}

inline std::filesystem::path output_dir(const ExperimentManifest& m, const RunOptions& opts) {
  return opts.out ? *opts.out : m.output_dir;
}

// min / median / max of the values of each class, one line per class.
inline std::string class_summary(const ValuationResult& r, const LabeledDataset& train) {
  std::ostringstream out;
  out << std::setprecision(6);
  for (int y = 0; y < train.class_count(); ++y) {
    std::vector<double> v;
    for (std::size_t i = 0; i < train.size(); ++i) {
      if (train.label(i) == y) v.push_back(r.values[i]);
    }
    out << "class " << train.label_names()[y] << ": n=" << v.size();
    if (!v.empty()) {
      std::sort(v.begin(), v.end());
      const double median = v.size() % 2 == 1
                                ? v[v.size() / 2]
                                : 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]);
      out << " min=" << v.front() << " median=" << median << " max=" << v.back();
    }
    out << '\n';
  }
  return out.str();
}

struct ValueOutcome {
  ValuationResult result;
  std::filesystem::path values_file;
};

// `value`: values the training split and writes values.json.
inline ValueOutcome cmd_value(const ExperimentManifest& m, const RunOptions& opts) {
  const ExperimentData data = load_experiment_data(m);
  ValueOutcome outcome{value_with_cache(m, data.split.train, data.split.dev, opts), {}};
  nlohmann::ordered_json j = to_json(outcome.result);
  j["manifest_digest"] = m.digest;
  j["dataset"] = split_to_json(data.split);
  j["dataset"]["train_digest"] = data.split.train.digest();
  outcome.values_file = output_dir(m, opts) / "values.json";
  internal::write_text(outcome.values_file, internal::dump(j));
  if (opts.log) *opts.log << class_summary(outcome.result, data.split.train);
  return outcome;
}

inline ValuationResult read_values_file(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error("cannot open values file '" + file.string() + "'");
  nlohmann::ordered_json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& ex) {
    throw Error("values file '" + file.string() + "' is not valid JSON: " + ex.what());
  }
  return valuation_result_from_json(j);
}

inline void check_eval_split(const ExperimentManifest& m, const ExperimentData& data) {
  if (m.evaluation.eval_split == "test" && data.split.test.digest() == data.split.dev.digest()) {
    throw Error("evaluation set coincides with the development set");
  }
}

struct RemovalOutcome {
  RemovalCurve curve;
  std::optional<double> wad;
};

// `remove-eval`: removal curve + WAD for a values file; writes removal.json
// and removal.csv.
inline RemovalOutcome cmd_remove_eval(const ExperimentManifest& m,
                                      const std::filesystem::path& values_file,
                                      const RunOptions& opts) {
  const ValuationResult values = read_values_file(values_file);
  const ExperimentData data = load_experiment_data(m);
  check_eval_split(m, data);
  RemovalOutcome outcome;
  outcome.curve = removal_curve(values, data.split.train, data.eval_set(m.evaluation),
                                m.classifier, m.evaluation.step, m.evaluation.cap);
  if (outcome.curve.step == 1) outcome.wad = wad(outcome.curve);

  const EvaluationReport report(outcome.curve,
                                Provenance{values.method, {values.seed}, data.split.train.digest()});
  nlohmann::ordered_json j = to_json(report);
  j["manifest_digest"] = m.digest;
  j["classifier"] = to_json(m.classifier);
  j["eval_split"] = m.evaluation.eval_split;
  const auto dir = output_dir(m, opts);
  internal::write_text(dir / "removal.json", internal::dump(j));
  internal::write_text(dir / "removal.csv", curve_csv(outcome.curve));
  if (opts.log) {
    if (outcome.wad) {
      *opts.log << "WAD " << std::setprecision(6) << *outcome.wad << '\n';
    } else {
      *opts.log << "WAD n/a (step " << outcome.curve.step << ")\n";
    }
  }
  return outcome;
}

struct NoiseOutcome {
  DetectionReport report;
  ValuationResult values;
  NoiseMask mask;
};

// `noise-eval`: flips a fraction of training labels, values the noisy
// training split and scores retrieval of the flipped instances.
inline NoiseOutcome cmd_noise_eval(const ExperimentManifest& m, const RunOptions& opts) {
  const ExperimentData data = load_experiment_data(m);
  const std::uint64_t noise_seed = m.evaluation.noise_seed.value_or(m.seed);
  auto [noisy, mask] = inject_label_noise(data.split.train, m.evaluation.noise_fraction, noise_seed);
  NoiseOutcome outcome{{}, value_with_cache(m, noisy, data.split.dev, opts), std::move(mask)};
  outcome.report = detect_noise(outcome.values, outcome.mask);

  const EvaluationReport report(outcome.report,
                                Provenance{outcome.values.method, {m.seed, noise_seed}, noisy.digest()});
  nlohmann::ordered_json j = to_json(report);
  j["manifest_digest"] = m.digest;
  j["noise"] = noise_mask_to_json(noisy, outcome.mask);
  j["values"] = to_json(outcome.values)["values"];
  const auto dir = output_dir(m, opts);
  internal::write_text(dir / "detection.json", internal::dump(j));
  internal::write_text(dir / "detection.csv", pr_csv(outcome.report));
  if (opts.log) *opts.log << "AUC " << std::setprecision(6) << outcome.report.auc << '\n';
  return outcome;
}

struct TransferOutcome {
  std::vector<EvaluationReport> reports;
  std::vector<std::filesystem::path> files;
};

// `transfer-eval`: removal curves for each target classifier, ordered by the
// source values. Targets come from `target_kinds` (default hyperparameters)
// or, when that is empty, from the manifest.
inline TransferOutcome cmd_transfer_eval(const ExperimentManifest& m,
                                         const std::filesystem::path& values_file,
                                         const std::vector<std::string>& target_kinds,
                                         const RunOptions& opts) {
  std::vector<ClassifierSpec> targets;
  for (const auto& kind : target_kinds) {
    ClassifierSpec spec = ClassifierSpec::defaults(parse_classifier_kind(kind));
    spec.seed = m.classifier.seed;
    targets.push_back(spec);
  }
  if (targets.empty()) targets = m.evaluation.targets;
  if (targets.empty()) throw Error("transfer-eval needs at least one target classifier");

  const ValuationResult values = read_values_file(values_file);
  const ExperimentData data = load_experiment_data(m);
  check_eval_split(m, data);
  TransferOutcome outcome;
  const auto dir = output_dir(m, opts);
  for (std::size_t t = 0; t < targets.size(); ++t) {
    auto report = transfer_eval(values, data.split.train, data.eval_set(m.evaluation), targets[t],
                                m.evaluation.step, m.evaluation.cap);
    const auto& curve = std::get<TransferReport>(report.payload()).curve;
    std::string stem = "transfer_" + to_string(targets[t].kind);
    const auto same_kind = std::count_if(targets.begin(), targets.end(), [&](const auto& s) {
      return s.kind == targets[t].kind;
    });
    if (same_kind > 1) stem += "_" + std::to_string(t);
    nlohmann::ordered_json j = to_json(report);
    j["manifest_digest"] = m.digest;
    j["eval_split"] = m.evaluation.eval_split;
    internal::write_text(dir / (stem + ".json"), internal::dump(j));
    internal::write_text(dir / (stem + ".csv"), curve_csv(curve));
    outcome.files.push_back(dir / (stem + ".json"));
    if (opts.log && curve.step == 1) {
      *opts.log << stem << " WAD " << std::setprecision(6) << wad(curve) << '\n';
    }
    outcome.reports.push_back(std::move(report));
  }
  return outcome;
}

}  // namespace csshap

#endif  // CSSHAP_EXPERIMENT_HPP
