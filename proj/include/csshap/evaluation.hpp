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

// Evaluation protocols for data values: high-value removal with the weighted
// accuracy drop, noisy-label retrieval with a precision-recall curve, and
// transfer of a value ranking to another classifier.

#ifndef CSSHAP_EVALUATION_HPP
#define CSSHAP_EVALUATION_HPP

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "csshap/common.hpp"
#include "csshap/data.hpp"
#include "csshap/estimators.hpp"
#include "csshap/models.hpp"

namespace csshap {

struct RemovalStep {
  double fraction_removed = 0.0;
  double accuracy = 0.0;
  std::size_t removed = 0;
  bool operator==(const RemovalStep&) const = default;
};

struct RemovalCurve {
  std::vector<RemovalStep> steps;
  double baseline_accuracy = 0.0;
  // Every training id, highest value first.
  std::vector<InstanceId> order;
  std::size_t step = 1;
  double cap = 0.5;
  bool truncated = false;
  std::string diagnostic;
  bool operator==(const RemovalCurve&) const = default;
};

struct PrPoint {
  double recall = 0.0;
  double precision = 0.0;
  bool operator==(const PrPoint&) const = default;
};

struct DetectionReport {
  std::vector<PrPoint> pr_points;
  double auc = 0.0;
  // Every training id, lowest value first.
  std::vector<InstanceId> inspection_order;
  std::size_t flipped_total = 0;
};

struct TransferReport {
  ClassifierSpec source;
  ClassifierSpec target;
  RemovalCurve curve;
};

enum class EvaluationKind { kRemoval, kDetection, kTransfer };

inline std::string to_string(EvaluationKind kind) {
  switch (kind) {
    case EvaluationKind::kRemoval: return "removal";
    case EvaluationKind::kDetection: return "detection";
    case EvaluationKind::kTransfer: return "transfer";
  }
  return "unknown";
}

struct Provenance {
  std::string method;
  std::vector<std::uint64_t> seeds;
  std::string dataset_digest;
};

// Tagged report; the tag is derived from the payload so they cannot disagree.
class EvaluationReport {
 public:
  using Payload = std::variant<RemovalCurve, DetectionReport, TransferReport>;

  EvaluationReport(Payload payload, Provenance provenance)
      : payload_(std::move(payload)), provenance_(std::move(provenance)) {}

  EvaluationKind kind() const { return static_cast<EvaluationKind>(payload_.index()); }
  const Payload& payload() const { return payload_; }
  const Provenance& provenance() const { return provenance_; }

 private:
  Payload payload_;
  Provenance provenance_;
};

namespace internal {

inline std::unordered_map<InstanceId, double> values_by_id(const ValuationResult& values,
                                                           const LabeledDataset& train) {
  if (values.values.size() != values.instance_ids.size()) {
    throw Error("valuation result has mismatched ids and values");
  }
  std::unordered_map<InstanceId, double> by_id;
  for (std::size_t i = 0; i < values.values.size(); ++i) {
    by_id.emplace(values.instance_ids[i], values.values[i]);
  }
  if (by_id.size() != train.size()) {
    throw Error("valuation result does not cover the training set");
  }
  for (InstanceId id : train.instance_ids()) {
    if (!by_id.contains(id)) {
      throw Error("training instance " + std::to_string(id) + " has no value");
    }
  }
  return by_id;
}

inline std::string format_double(double v) {
  char buffer[64];
  auto [end, ec] = std::to_chars(buffer, buffer + sizeof(buffer), v);
  return std::string(buffer, end);
}

}  // namespace internal

// Removes training instances from the highest to the lowest value (equal
// values: ascending instance id), retraining after every `step` removals and
// scoring on `eval_set`, until `cap` of the training set is gone. If a removal
// would leave some class without training instances, the curve stops there.
inline RemovalCurve removal_curve(const ValuationResult& values, const LabeledDataset& train,
                                  const LabeledDataset& eval_set, const ClassifierSpec& classifier,
                                  std::size_t step = 1, double cap = 0.5) {
  if (step < 1) throw Error("removal step must be >= 1");
  if (!(cap > 0.0 && cap <= 1.0)) throw Error("removal cap must lie in (0, 1]");
  if (eval_set.empty()) throw Error("evaluation set is empty");
  const auto by_id = internal::values_by_id(values, train);
  const std::size_t n = train.size();

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto& ids = train.instance_ids();
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double va = by_id.at(ids[a]);
    const double vb = by_id.at(ids[b]);
    if (va != vb) return va > vb;
    return ids[a] < ids[b];
  });

  auto accuracy_on = [&](std::span<const std::size_t> rows) {
    const TrainedModel model = fit(classifier, train, rows);
    return overall_value(model, eval_set);
  };

  RemovalCurve curve;
  curve.step = step;
  curve.cap = cap;
  for (std::size_t r : order) curve.order.push_back(ids[r]);
  std::vector<std::size_t> everything(n);
  std::iota(everything.begin(), everything.end(), std::size_t{0});
  curve.baseline_accuracy = accuracy_on(everything);

  const auto max_removed =
      static_cast<std::size_t>(std::floor(cap * static_cast<double>(n) + 1e-9));
  std::vector<bool> removed(n, false);
  auto remaining_per_class = train.class_counts();
  for (std::size_t count = 1; count <= max_removed; ++count) {
    const std::size_t victim = order[count - 1];
    if (remaining_per_class[train.label(victim)] == 1) {
      curve.truncated = true;
      curve.diagnostic = "stopped after " + std::to_string(count - 1) +
                         " removals: removing instance " + std::to_string(ids[victim]) +
                         " would empty class " + std::to_string(train.label(victim));
      break;
    }
    removed[victim] = true;
    --remaining_per_class[train.label(victim)];
    if (count % step != 0) continue;
    std::vector<std::size_t> rows;
    rows.reserve(n - count);
    for (std::size_t r = 0; r < n; ++r) {
      if (!removed[r]) rows.push_back(r);
    }
    curve.steps.push_back({static_cast<double>(count) / static_cast<double>(n),
                           accuracy_on(rows), count});
  }
  return curve;
}

// Weighted accuracy drop:  sum_j (1/j) sum_{i<=j} (a_{i-1} - a_i), a_0 being
// the baseline accuracy. Requires a curve retrained after every removal.
inline double wad(const RemovalCurve& curve) {
  if (curve.step != 1) throw Error("weighted accuracy drop needs a curve with step 1");
  double total = 0.0;
  for (std::size_t j = 1; j <= curve.steps.size(); ++j) {
    double cumulative = 0.0;
    for (std::size_t i = 1; i <= j; ++i) {
      const double before = i == 1 ? curve.baseline_accuracy : curve.steps[i - 2].accuracy;
      cumulative += before - curve.steps[i - 1].accuracy;
    }
    total += cumulative / static_cast<double>(j);
  }
  return total;
}

// The same quantity via the telescoped form  sum_j (a_0 - a_j) / j.
inline double wad_telescoped(const RemovalCurve& curve) {
  if (curve.step != 1) throw Error("weighted accuracy drop needs a curve with step 1");
  double total = 0.0;
  for (std::size_t j = 1; j <= curve.steps.size(); ++j) {
    total += (curve.baseline_accuracy - curve.steps[j - 1].accuracy) / static_cast<double>(j);
  }
  return total;
}

// Inspects instances from the lowest value up (equal values: ascending id).
// AUC is the average precision: precision summed at every recall increment
// times the increment.
inline DetectionReport detect_noise(const ValuationResult& values, const NoiseMask& mask) {
  const std::size_t n = values.values.size();
  if (mask.flipped.size() != n || values.instance_ids.size() != n) {
    throw Error("noise mask is not aligned with the valuation result");
  }
  const std::size_t total = mask.flipped_count();
  if (total == 0) throw Error("noise mask has no flipped instances");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (values.values[a] != values.values[b]) return values.values[a] < values.values[b];
    return values.instance_ids[a] < values.instance_ids[b];
  });

  DetectionReport report;
  report.flipped_total = total;
  std::size_t found = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t r = order[k];
    report.inspection_order.push_back(values.instance_ids[r]);
    if (mask.flipped[r]) {
      ++found;
      report.auc += (static_cast<double>(found) / static_cast<double>(k + 1)) /
                    static_cast<double>(total);
    }
    report.pr_points.push_back({static_cast<double>(found) / static_cast<double>(total),
                                static_cast<double>(found) / static_cast<double>(k + 1)});
  }
  return report;
}

// Removal curve driven by the source ranking but retraining `target`.
inline EvaluationReport transfer_eval(const ValuationResult& values, const LabeledDataset& train,
                                      const LabeledDataset& eval_set, const ClassifierSpec& target,
                                      std::size_t step = 1, double cap = 0.5) {
  target.validate();
  TransferReport payload{values.classifier, target,
                         removal_curve(values, train, eval_set, target, step, cap)};
  return EvaluationReport(std::move(payload),
                          Provenance{values.method, {values.seed}, train.digest()});
}

inline nlohmann::ordered_json to_json(const RemovalCurve& curve) {
  nlohmann::ordered_json steps = nlohmann::ordered_json::array();
  for (const auto& s : curve.steps) {
    steps.push_back({{"removed", s.removed},
                     {"fraction_removed", s.fraction_removed},
                     {"accuracy", s.accuracy}});
  }
  nlohmann::ordered_json j = {{"baseline_accuracy", curve.baseline_accuracy},
                              {"step", curve.step},
                              {"cap", curve.cap},
                              {"truncated", curve.truncated},
                              {"diagnostic", curve.diagnostic},
                              {"steps", std::move(steps)},
                              {"order", curve.order}};
  if (curve.step == 1) {
    j["wad"] = wad(curve);
  }
  return j;
}

inline nlohmann::ordered_json to_json(const DetectionReport& report) {
  nlohmann::ordered_json points = nlohmann::ordered_json::array();
  for (const auto& p : report.pr_points) {
    points.push_back({{"recall", p.recall}, {"precision", p.precision}});
  }
  return {{"auc", report.auc},
          {"flipped_total", report.flipped_total},
          {"pr_points", std::move(points)},
          {"inspection_order", report.inspection_order}};
}

inline nlohmann::ordered_json to_json(const EvaluationReport& report) {
  nlohmann::ordered_json payload = std::visit(
      [](const auto& p) -> nlohmann::ordered_json {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, TransferReport>) {
          return {{"source", to_json(p.source)},
                  {"target", to_json(p.target)},
                  {"curve", to_json(p.curve)}};
        } else {
          return to_json(p);
        }
      },
      report.payload());
  const auto& prov = report.provenance();
  return {{"kind", to_string(report.kind())},
          {"provenance",
           {{"method", prov.method}, {"seeds", prov.seeds}, {"dataset_digest", prov.dataset_digest}}},
          {"payload", std::move(payload)}};
}

// Two numeric columns with a header row.
inline std::string curve_csv(const RemovalCurve& curve) {
  std::string out = "fraction_removed,accuracy\n";
  out += "0," + internal::format_double(curve.baseline_accuracy) + "\n";
  for (const auto& s : curve.steps) {
    out += internal::format_double(s.fraction_removed) + "," +
           internal::format_double(s.accuracy) + "\n";
  }
  return out;
}

inline std::string pr_csv(const DetectionReport& report) {
  std::string out = "recall,precision\n";
  for (const auto& p : report.pr_points) {
    out += internal::format_double(p.recall) + "," + internal::format_double(p.precision) + "\n";
  }
  return out;
}

}  // namespace csshap

#endif  // CSSHAP_EVALUATION_HPP
