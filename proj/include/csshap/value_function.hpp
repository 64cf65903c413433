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

#ifndef CSSHAP_VALUE_FUNCTION_HPP
#define CSSHAP_VALUE_FUNCTION_HPP

#include <cmath>
#include <numbers>
#include <span>
#include <string>

#include <nlohmann/json.hpp>

#include "csshap/common.hpp"
#include "csshap/data.hpp"
#include "csshap/models.hpp"

namespace csshap {

enum class ValueFunctionKind { kClasswise, kOverallAccuracy };

inline std::string to_string(ValueFunctionKind kind) {
  return kind == ValueFunctionKind::kClasswise ? "cs_classwise"
                                               : "overall_accuracy";
}

// Class-wise value  scale * in_class * basis^out_of_class, or scale times the
// overall dev accuracy.
struct ValueFunctionConfig {
  ValueFunctionKind kind = ValueFunctionKind::kClasswise;
  double basis = std::numbers::e;
  double scale = 1.0;

  static ValueFunctionConfig overall_accuracy() {
    return {ValueFunctionKind::kOverallAccuracy, std::numbers::e, 1.0};
  }

  void validate() const {
    if (!(basis > 1.0)) throw Error("value function basis must be > 1");
    if (!(scale > 0.0)) throw Error("value function scale must be > 0");
  }

  bool operator==(const ValueFunctionConfig&) const = default;
};

inline nlohmann::ordered_json to_json(const ValueFunctionConfig& cfg) {
  return {{"kind", to_string(cfg.kind)}, {"basis", cfg.basis}, {"scale", cfg.scale}};
}

inline ValueFunctionConfig value_function_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error("value_function must be a JSON object");
  ValueFunctionConfig cfg;
  for (const auto& [key, value] : j.items()) {
    if (key == "kind") {
      const auto name = value.get<std::string>();
      if (name == "cs_classwise") {
        cfg.kind = ValueFunctionKind::kClasswise;
      } else if (name == "overall_accuracy") {
        cfg.kind = ValueFunctionKind::kOverallAccuracy;
      } else {
        throw Error("unknown value function kind '" + name + "'");
      }
    } else if (key == "basis") {
      cfg.basis = value.get<double>();
    } else if (key == "scale") {
      cfg.scale = value.get<double>();
    } else {
      throw Error("unknown value_function key '" + key + "'");
    }
  }
  cfg.validate();
  return cfg;
}

inline double cs_value(double in_class, double out_of_class,
                       const ValueFunctionConfig& cfg = {}) {
  return cfg.scale * in_class * std::pow(cfg.basis, out_of_class);
}

inline double cs_value(const AccuracyPair& acc, const ValueFunctionConfig& cfg = {}) {
  return cs_value(acc.in_class, acc.out_of_class, cfg);
}

inline double overall_value(const TrainedModel& model, const LabeledDataset& dev) {
  if (dev.empty()) throw Error("development set is empty");
  std::size_t correct = 0;
  for (std::size_t c : correct_by_class(model, dev)) correct += c;
  return static_cast<double>(correct) / static_cast<double>(dev.size());
}

// Priority of in-class accuracy: any positive in-class accuracy with zero
// out-of-class accuracy beats zero in-class accuracy with perfect
// out-of-class accuracy.
inline bool check_property1(const ValueFunctionConfig& cfg,
                            std::span<const double> in_class_samples) {
  const double floor_value = cs_value(0.0, 1.0, cfg);
  bool holds = true;
  for (double a : in_class_samples) {
    if (!(a > 0.0)) throw Error("property 1 samples must be > 0");
    holds = holds && cs_value(a, 0.0, cfg) > floor_value;
  }
  return holds;
}

// In-class additivity with multiplicative out-of-class discounting, for a
// two-way partition of both halves of the dev set.
inline bool check_property2(const ValueFunctionConfig& cfg, double a1, double a2,
                            double b1, double b2) {
  auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!unit(a1) || !unit(a2) || !unit(b1) || !unit(b2) || !unit(a1 + a2) ||
      !unit(b1 + b2)) {
    throw Error("property 2 arguments and their sums must lie in [0, 1]");
  }
  const double whole = cs_value(a1 + a2, b1 + b2, cfg);
  const double weight = std::pow(cfg.basis, b1) * std::pow(cfg.basis, b2);
  const double parts = cfg.scale * a1 * weight + cfg.scale * a2 * weight;
  return std::abs(whole - parts) <= 1e-12;
}

}  // namespace csshap

#endif  // CSSHAP_VALUE_FUNCTION_HPP
