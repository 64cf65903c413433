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

// Classifiers used as the learning algorithm inside every value function:
// multinomial logistic regression, k-nearest neighbors, a one-hidden-layer
// MLP and a majority-class baseline. Every fit is a pure function of
// (spec, training rows), so identical subsets always give identical models.

#ifndef CSSHAP_MODELS_HPP
#define CSSHAP_MODELS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "csshap/common.hpp"
#include "csshap/data.hpp"

namespace csshap {

enum class ClassifierKind { kLogisticRegression, kKnn, kMlp, kMajorityClass };

inline std::string to_string(ClassifierKind kind) {
  switch (kind) {
    case ClassifierKind::kLogisticRegression: return "logistic_regression";
    case ClassifierKind::kKnn: return "knn";
    case ClassifierKind::kMlp: return "mlp";
    case ClassifierKind::kMajorityClass: return "majority_class";
  }
  return "unknown";
}

// Accepts canonical names plus the short aliases "lr" and "majority".
inline ClassifierKind parse_classifier_kind(const std::string& name) {
  if (name == "logistic_regression" || name == "lr") {
    return ClassifierKind::kLogisticRegression;
  }
  if (name == "knn") return ClassifierKind::kKnn;
  if (name == "mlp") return ClassifierKind::kMlp;
  if (name == "majority_class" || name == "majority") {
    return ClassifierKind::kMajorityClass;
  }
  throw Error("unknown classifier kind '" + name + "'");
}

struct ClassifierSpec {
  ClassifierKind kind = ClassifierKind::kLogisticRegression;
  // Logistic regression and MLP.
  double learning_rate = 0.5;
  double l2 = 1e-3;
  // Logistic regression.
  int iterations = 100;
  // k-NN.
  int k = 5;
  // MLP.
  int hidden_width = 16;
  int epochs = 50;
  std::uint64_t seed = 0;

  static ClassifierSpec defaults(ClassifierKind kind) {
    ClassifierSpec spec;
    spec.kind = kind;
    if (kind == ClassifierKind::kMlp) {
      spec.learning_rate = 0.05;
      spec.l2 = 0.0;
    }
    return spec;
  }

  void validate() const {
    switch (kind) {
      case ClassifierKind::kLogisticRegression:
        if (!(learning_rate > 0.0)) throw Error("learning_rate must be > 0");
        if (iterations < 1) throw Error("iterations must be >= 1");
        if (!(l2 >= 0.0)) throw Error("l2 must be >= 0");
        break;
      case ClassifierKind::kKnn:
        if (k < 1) throw Error("k must be >= 1");
        break;
      case ClassifierKind::kMlp:
        if (!(learning_rate > 0.0)) throw Error("learning_rate must be > 0");
        if (hidden_width < 1) throw Error("hidden_width must be >= 1");
        if (epochs < 1) throw Error("epochs must be >= 1");
        if (!(l2 >= 0.0)) throw Error("l2 must be >= 0");
        break;
      case ClassifierKind::kMajorityClass:
        break;
    }
  }

  bool operator==(const ClassifierSpec&) const = default;
};

// Only the hyperparameters meaningful for `kind` are written.
inline nlohmann::ordered_json to_json(const ClassifierSpec& spec) {
  nlohmann::ordered_json hp = nlohmann::ordered_json::object();
  switch (spec.kind) {
    case ClassifierKind::kLogisticRegression:
      hp["learning_rate"] = spec.learning_rate;
      hp["iterations"] = spec.iterations;
      hp["l2"] = spec.l2;
      break;
    case ClassifierKind::kKnn:
      hp["k"] = spec.k;
      break;
    case ClassifierKind::kMlp:
      hp["learning_rate"] = spec.learning_rate;
      hp["hidden_width"] = spec.hidden_width;
      hp["epochs"] = spec.epochs;
      hp["l2"] = spec.l2;
      break;
    case ClassifierKind::kMajorityClass:
      break;
  }
  return {{"kind", to_string(spec.kind)},
          {"hyperparameters", std::move(hp)},
          {"seed", spec.seed}};
}

// Strict: unknown keys, and hyperparameters foreign to the kind, are errors.
inline ClassifierSpec classifier_spec_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error("classifier spec must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (key != "kind" && key != "hyperparameters" && key != "seed") {
      throw Error("unknown classifier key '" + key + "'");
    }
  }
  if (!j.contains("kind") || !j["kind"].is_string()) {
    throw Error("classifier spec requires a string 'kind'");
  }
  ClassifierSpec spec = ClassifierSpec::defaults(
      parse_classifier_kind(j["kind"].get<std::string>()));
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) {
      throw Error("classifier 'seed' must be a non-negative integer");
    }
    spec.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("hyperparameters")) {
    const auto& hp = j["hyperparameters"];
    if (!hp.is_object()) throw Error("'hyperparameters' must be an object");
    const auto allowed = to_json(spec)["hyperparameters"];
    for (const auto& [key, value] : hp.items()) {
      if (!allowed.contains(key)) {
        throw Error("hyperparameter '" + key + "' is not valid for " +
                    to_string(spec.kind));
      }
      if (!value.is_number()) {
        throw Error("hyperparameter '" + key + "' must be numeric");
      }
      const bool integral = key == "iterations" || key == "k" ||
                            key == "hidden_width" || key == "epochs";
      if (integral && !value.is_number_integer()) {
        throw Error("hyperparameter '" + key + "' must be an integer");
      }
      if (key == "learning_rate") spec.learning_rate = value.get<double>();
      if (key == "l2") spec.l2 = value.get<double>();
      if (key == "iterations") spec.iterations = value.get<int>();
      if (key == "k") spec.k = value.get<int>();
      if (key == "hidden_width") spec.hidden_width = value.get<int>();
      if (key == "epochs") spec.epochs = value.get<int>();
    }
  }
  spec.validate();
  return spec;
}

namespace internal {

struct ConstantState {
  int label = 0;
};

struct LinearState {
  // class_count x (feature_count + 1); the last column is the bias.
  Matrix weights;
};

struct KnnState {
  Matrix features;
  std::vector<int> labels;
  std::vector<InstanceId> ids;
  int k = 1;
};

struct MlpState {
  Matrix hidden;  // hidden_width x (feature_count + 1)
  Matrix output;  // class_count x (hidden_width + 1)
};

inline void softmax_inplace(std::span<double> z) {
  const double peak = *std::max_element(z.begin(), z.end());
  double total = 0.0;
  for (double& v : z) {
    v = std::exp(v - peak);
    total += v;
  }
  for (double& v : z) v /= total;
}

inline int argmax(std::span<const double> z) {
  return static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin());
}

inline LinearState fit_logistic(const ClassifierSpec& spec, const Matrix& x,
                                std::span<const int> y, int classes) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  LinearState state{Matrix(classes, d + 1, 0.0)};
  Matrix grad(classes, d + 1);
  std::vector<double> prob(classes);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (int it = 0; it < spec.iterations; ++it) {
    grad.fill(0.0);
    for (std::size_t r = 0; r < n; ++r) {
      const auto xr = x.row(r);
      for (int c = 0; c < classes; ++c) {
        const auto w = state.weights.row(c);
        double z = w[d];
        for (std::size_t f = 0; f < d; ++f) z += w[f] * xr[f];
        prob[c] = z;
      }
      softmax_inplace(prob);
      prob[y[r]] -= 1.0;
      for (int c = 0; c < classes; ++c) {
        auto g = grad.row(c);
        for (std::size_t f = 0; f < d; ++f) g[f] += prob[c] * xr[f];
        g[d] += prob[c];
      }
    }
    for (int c = 0; c < classes; ++c) {
      auto w = state.weights.row(c);
      const auto g = grad.row(c);
      for (std::size_t f = 0; f <= d; ++f) {
        const double penalty = f < d ? spec.l2 * w[f] : 0.0;
        w[f] -= spec.learning_rate * (g[f] * inv_n + penalty);
      }
    }
  }
  return state;
}

inline MlpState fit_mlp(const ClassifierSpec& spec, const Matrix& x,
                        std::span<const int> y, int classes) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  const std::size_t h = static_cast<std::size_t>(spec.hidden_width);
  MlpState state{Matrix(h, d + 1), Matrix(classes, h + 1)};
  auto init_rng = unit_rng(spec.seed, 0x31a9, 0);
  std::uniform_real_distribution<double> hidden_init(
      -1.0 / std::sqrt(static_cast<double>(d + 1)),
      1.0 / std::sqrt(static_cast<double>(d + 1)));
  std::uniform_real_distribution<double> output_init(
      -1.0 / std::sqrt(static_cast<double>(h + 1)),
      1.0 / std::sqrt(static_cast<double>(h + 1)));
  for (std::size_t i = 0; i < h; ++i) {
    for (std::size_t f = 0; f <= d; ++f) state.hidden(i, f) = hidden_init(init_rng);
  }
  for (int c = 0; c < classes; ++c) {
    for (std::size_t i = 0; i <= h; ++i) state.output(c, i) = output_init(init_rng);
  }

  std::vector<double> act(h), out(classes), delta_hidden(h);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const double lr = spec.learning_rate;
  for (int epoch = 0; epoch < spec.epochs; ++epoch) {
    auto rng = unit_rng(spec.seed, 0x5e90, static_cast<std::uint64_t>(epoch));
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t r : order) {
      const auto xr = x.row(r);
      for (std::size_t i = 0; i < h; ++i) {
        const auto w = state.hidden.row(i);
        double z = w[d];
        for (std::size_t f = 0; f < d; ++f) z += w[f] * xr[f];
        act[i] = std::tanh(z);
      }
      for (int c = 0; c < classes; ++c) {
        const auto w = state.output.row(c);
        double z = w[h];
        for (std::size_t i = 0; i < h; ++i) z += w[i] * act[i];
        out[c] = z;
      }
      softmax_inplace(out);
      out[y[r]] -= 1.0;
      std::fill(delta_hidden.begin(), delta_hidden.end(), 0.0);
      for (int c = 0; c < classes; ++c) {
        auto w = state.output.row(c);
        for (std::size_t i = 0; i < h; ++i) {
          delta_hidden[i] += out[c] * w[i];
          w[i] -= lr * (out[c] * act[i] + spec.l2 * w[i]);
        }
        w[h] -= lr * out[c];
      }
      for (std::size_t i = 0; i < h; ++i) {
        const double g = delta_hidden[i] * (1.0 - act[i] * act[i]);
        auto w = state.hidden.row(i);
        for (std::size_t f = 0; f < d; ++f) w[f] -= lr * (g * xr[f] + spec.l2 * w[f]);
        w[d] -= lr * g;
      }
    }
  }
  return state;
}

}  // namespace internal

// A fitted classifier. Immutable; predict is safe to call concurrently.
class TrainedModel {
 public:
  using State = std::variant<internal::ConstantState, internal::LinearState,
                             internal::KnnState, internal::MlpState>;

  TrainedModel(ClassifierSpec spec, int class_count, std::size_t feature_count,
               std::vector<InstanceId> trained_on, State state)
      : spec_(std::move(spec)),
        class_count_(class_count),
        feature_count_(feature_count),
        trained_on_(std::move(trained_on)),
        state_(std::move(state)) {}

  const ClassifierSpec& spec() const { return spec_; }
  int class_count() const { return class_count_; }
  std::size_t feature_count() const { return feature_count_; }
  const std::vector<InstanceId>& trained_on() const { return trained_on_; }
  bool is_constant() const {
    return std::holds_alternative<internal::ConstantState>(state_);
  }

  int predict_row(std::span<const double> x) const {
    return std::visit([&](const auto& s) { return predict_one(s, x); }, state_);
  }

  std::vector<int> predict(const Matrix& features) const {
    if (features.rows() > 0 && features.cols() != feature_count_) {
      throw Error("feature matrix has " + std::to_string(features.cols()) +
                  " columns, model was trained on " +
                  std::to_string(feature_count_));
    }
    std::vector<int> out(features.rows());
    for (std::size_t r = 0; r < features.rows(); ++r) out[r] = predict_row(features.row(r));
    return out;
  }

 private:
  int predict_one(const internal::ConstantState& s, std::span<const double>) const {
    return s.label;
  }

  int predict_one(const internal::LinearState& s, std::span<const double> x) const {
    std::vector<double> z(class_count_);
    const std::size_t d = feature_count_;
    for (int c = 0; c < class_count_; ++c) {
      const auto w = s.weights.row(c);
      double v = w[d];
      for (std::size_t f = 0; f < d; ++f) v += w[f] * x[f];
      z[c] = v;
    }
    return internal::argmax(z);
  }

  // Euclidean distance; equal distances prefer the lower instance id, equal
  // votes prefer the lower class index.
  int predict_one(const internal::KnnState& s, std::span<const double> x) const {
    const std::size_t n = s.labels.size();
    std::vector<std::pair<double, std::size_t>> dist(n);
    for (std::size_t r = 0; r < n; ++r) {
      const auto xr = s.features.row(r);
      double sq = 0.0;
      for (std::size_t f = 0; f < xr.size(); ++f) {
        const double diff = xr[f] - x[f];
        sq += diff * diff;
      }
      dist[r] = {sq, r};
    }
    const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(s.k), n);
    auto closer = [&s](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first < b.first;
      return s.ids[a.second] < s.ids[b.second];
    };
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k),
                      dist.end(), closer);
    std::vector<int> votes(class_count_, 0);
    for (std::size_t i = 0; i < k; ++i) ++votes[s.labels[dist[i].second]];
    return static_cast<int>(std::max_element(votes.begin(), votes.end()) -
                            votes.begin());
  }

  int predict_one(const internal::MlpState& s, std::span<const double> x) const {
    const std::size_t d = feature_count_;
    const std::size_t h = s.hidden.rows();
    std::vector<double> act(h), z(class_count_);
    for (std::size_t i = 0; i < h; ++i) {
      const auto w = s.hidden.row(i);
      double v = w[d];
      for (std::size_t f = 0; f < d; ++f) v += w[f] * x[f];
      act[i] = std::tanh(v);
    }
    for (int c = 0; c < class_count_; ++c) {
      const auto w = s.output.row(c);
      double v = w[h];
      for (std::size_t i = 0; i < h; ++i) v += w[i] * act[i];
      z[c] = v;
    }
    return internal::argmax(z);
  }

  ClassifierSpec spec_;
  int class_count_ = 0;
  std::size_t feature_count_ = 0;
  std::vector<InstanceId> trained_on_;
  State state_;
};

// Fits on the given rows of `train`, visited in ascending row order so the
// result depends only on the row set. An empty row set predicts class 0; a
// single-class row set predicts that class.
inline TrainedModel fit(const ClassifierSpec& spec, const LabeledDataset& train,
                        std::span<const std::size_t> rows) {
  spec.validate();
  std::vector<std::size_t> sorted(rows.begin(), rows.end());
  std::sort(sorted.begin(), sorted.end());
  const int classes = train.class_count();
  const std::size_t d = train.feature_count();

  std::vector<InstanceId> ids;
  std::vector<int> y;
  ids.reserve(sorted.size());
  y.reserve(sorted.size());
  std::vector<std::size_t> counts(classes, 0);
  for (std::size_t r : sorted) {
    ids.push_back(train.instance_ids().at(r));
    y.push_back(train.label(r));
    ++counts[train.label(r)];
  }
  const auto present = std::count_if(counts.begin(), counts.end(),
                                     [](std::size_t c) { return c > 0; });
  if (present <= 1 || spec.kind == ClassifierKind::kMajorityClass) {
    const int label = static_cast<int>(
        std::max_element(counts.begin(), counts.end()) - counts.begin());
    return TrainedModel(spec, classes, d, std::move(ids),
                        internal::ConstantState{label});
  }

  Matrix x = train.features().select_rows(sorted);
  switch (spec.kind) {
    case ClassifierKind::kLogisticRegression: {
      auto state = internal::fit_logistic(spec, x, y, classes);
      return TrainedModel(spec, classes, d, std::move(ids), std::move(state));
    }
    case ClassifierKind::kKnn: {
      internal::KnnState state{std::move(x), std::move(y), ids, spec.k};
      return TrainedModel(spec, classes, d, std::move(ids), std::move(state));
    }
    case ClassifierKind::kMlp: {
      auto state = internal::fit_mlp(spec, x, y, classes);
      return TrainedModel(spec, classes, d, std::move(ids), std::move(state));
    }
    case ClassifierKind::kMajorityClass:
      break;
  }
  throw Error("unsupported classifier kind");
}

inline TrainedModel fit(const ClassifierSpec& spec, const LabeledDataset& train) {
  std::vector<std::size_t> rows(train.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return fit(spec, train, rows);
}

inline std::vector<int> predict(const TrainedModel& model, const Matrix& features) {
  return model.predict(features);
}

// Correct-prediction counts on `dev`, bucketed by true label.
inline std::vector<std::size_t> correct_by_class(const TrainedModel& model,
                                                 const LabeledDataset& dev) {
  std::vector<std::size_t> correct(dev.class_count(), 0);
  const auto predicted = model.predict(dev.features());
  for (std::size_t r = 0; r < dev.size(); ++r) {
    if (predicted[r] == dev.label(r)) ++correct[dev.label(r)];
  }
  return correct;
}

// In-class and out-of-class accuracy, both over the full dev-set size.
struct AccuracyPair {
  double in_class = 0.0;
  double out_of_class = 0.0;
  std::size_t in_correct = 0;
  std::size_t out_correct = 0;
  std::size_t dev_size = 0;

  static AccuracyPair from_counts(std::size_t in_correct, std::size_t out_correct,
                                  std::size_t dev_size) {
    if (dev_size == 0) throw Error("development set is empty");
    if (in_correct + out_correct > dev_size) {
      throw Error("correct counts exceed the development set size");
    }
    const double total = static_cast<double>(dev_size);
    return {static_cast<double>(in_correct) / total,
            static_cast<double>(out_correct) / total, in_correct, out_correct,
            dev_size};
  }

  static AccuracyPair from_class_counts(std::span<const std::size_t> correct,
                                        std::size_t dev_size, int y) {
    std::size_t in = 0;
    std::size_t out = 0;
    for (std::size_t c = 0; c < correct.size(); ++c) {
      (static_cast<int>(c) == y ? in : out) += correct[c];
    }
    return from_counts(in, out, dev_size);
  }

  // Overall dev accuracy, computed from the summed counts.
  double overall() const {
    return static_cast<double>(in_correct + out_correct) /
           static_cast<double>(dev_size);
  }
};

inline AccuracyPair class_accuracies(const TrainedModel& model,
                                     const LabeledDataset& dev, int y) {
  if (dev.empty()) throw Error("development set is empty");
  if (y < 0 || y >= dev.class_count()) throw Error("unknown class " + std::to_string(y));
  return AccuracyPair::from_class_counts(correct_by_class(model, dev), dev.size(), y);
}

}  // namespace csshap

#endif  // CSSHAP_MODELS_HPP
