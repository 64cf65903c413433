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

// Labeled datasets: CSV ingestion, stratified splitting, class partitions and
// label-noise injection.

#ifndef CSSHAP_DATA_HPP
#define CSSHAP_DATA_HPP

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "csshap/common.hpp"

namespace csshap {

using InstanceId = std::uint64_t;

// Feature matrix plus integer class labels in {0..C-1}. Immutable once built;
// the constructor enforces the row-alignment, label-range and unique-id
// invariants.
class LabeledDataset {
 public:
  LabeledDataset() = default;

  LabeledDataset(Matrix features, std::vector<int> labels, int class_count,
                 std::vector<InstanceId> instance_ids,
                 std::vector<std::string> label_names = {})
      : features_(std::move(features)),
        labels_(std::move(labels)),
        class_count_(class_count),
        instance_ids_(std::move(instance_ids)),
        label_names_(std::move(label_names)) {
    if (class_count_ < 2) throw Error("class_count must be at least 2");
    if (features_.rows() != labels_.size() ||
        labels_.size() != instance_ids_.size()) {
      throw Error("features, labels and instance_ids must have equal length");
    }
    for (int label : labels_) {
      if (label < 0 || label >= class_count_) {
        throw Error("label " + std::to_string(label) + " outside [0, " +
                    std::to_string(class_count_) + ")");
      }
    }
    std::vector<InstanceId> sorted = instance_ids_;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      throw Error("instance_ids must be unique");
    }
    if (label_names_.empty()) {
      for (int c = 0; c < class_count_; ++c) {
        label_names_.push_back(std::to_string(c));
      }
    } else if (label_names_.size() != static_cast<std::size_t>(class_count_)) {
      throw Error("label_names must have one entry per class");
    }
  }

  // Convenience constructor with ids 0..n-1.
  static LabeledDataset with_sequential_ids(Matrix features,
                                            std::vector<int> labels,
                                            int class_count) {
    std::vector<InstanceId> ids(labels.size());
    std::iota(ids.begin(), ids.end(), InstanceId{0});
    return LabeledDataset(std::move(features), std::move(labels), class_count,
                          std::move(ids));
  }

  std::size_t size() const { return labels_.size(); }
  bool empty() const { return labels_.empty(); }
  std::size_t feature_count() const { return features_.cols(); }
  int class_count() const { return class_count_; }

  const Matrix& features() const { return features_; }
  const std::vector<int>& labels() const { return labels_; }
  int label(std::size_t row) const { return labels_[row]; }
  const std::vector<InstanceId>& instance_ids() const { return instance_ids_; }
  // Raw label string for each encoded class.
  const std::vector<std::string>& label_names() const { return label_names_; }

  std::vector<std::size_t> class_counts() const {
    std::vector<std::size_t> counts(class_count_, 0);
    for (int label : labels_) ++counts[label];
    return counts;
  }

  LabeledDataset subset(std::span<const std::size_t> rows) const {
    std::vector<int> labels;
    std::vector<InstanceId> ids;
    labels.reserve(rows.size());
    ids.reserve(rows.size());
    for (std::size_t r : rows) {
      labels.push_back(labels_.at(r));
      ids.push_back(instance_ids_[r]);
    }
    Matrix features = features_.select_rows(rows);
    if (rows.empty()) features = Matrix(0, features_.cols());
    return LabeledDataset(std::move(features), std::move(labels), class_count_,
                          std::move(ids), label_names_);
  }

  LabeledDataset with_labels(std::vector<int> labels) const {
    return LabeledDataset(features_, std::move(labels), class_count_,
                          instance_ids_, label_names_);
  }

  LabeledDataset with_features(Matrix features) const {
    return LabeledDataset(std::move(features), labels_, class_count_,
                          instance_ids_, label_names_);
  }

  // SHA-256 over ids, labels, class count and raw feature bytes.
  std::string digest() const {
    std::string bytes;
    auto append = [&bytes](const void* p, std::size_t n) {
      bytes.append(static_cast<const char*>(p), n);
    };
    const std::uint64_t header[3] = {size(), feature_count(),
                                     static_cast<std::uint64_t>(class_count_)};
    append(header, sizeof(header));
    append(instance_ids_.data(), instance_ids_.size() * sizeof(InstanceId));
    append(labels_.data(), labels_.size() * sizeof(int));
    append(features_.data().data(), features_.data().size() * sizeof(double));
    return sha256_hex(bytes);
  }

  bool operator==(const LabeledDataset&) const = default;

 private:
  Matrix features_;
  std::vector<int> labels_;
  int class_count_ = 0;
  std::vector<InstanceId> instance_ids_;
  std::vector<std::string> label_names_;
};

// In-class / out-of-class index split of a dataset relative to one class.
struct ClassPartition {
  std::vector<std::size_t> in_class;
  std::vector<std::size_t> out_of_class;
  int target_class = 0;
};

// Ground truth for injected label noise.
struct NoiseMask {
  std::vector<bool> flipped;
  std::vector<int> original_labels;
  double fraction = 0.0;

  std::size_t flipped_count() const {
    return static_cast<std::size_t>(
        std::count(flipped.begin(), flipped.end(), true));
  }
};

struct DatasetSplit {
  LabeledDataset train;
  LabeledDataset dev;
  LabeledDataset test;
  std::array<std::vector<std::size_t>, 3> rows;  // train, dev, test
};

using LabelColumn = std::variant<std::string, std::size_t>;

namespace internal {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cell.push_back('"');
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cell.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      cells.push_back(std::move(cell));
      cell.clear();
    } else if (ch != '\r') {
      cell.push_back(ch);
    }
  }
  cells.push_back(std::move(cell));
  for (auto& c : cells) {
    const auto first = c.find_first_not_of(" \t");
    const auto last = c.find_last_not_of(" \t");
    c = first == std::string::npos ? std::string() : c.substr(first, last - first + 1);
  }
  return cells;
}

}  // namespace internal

// Reads a comma-separated file. Labels are re-encoded to {0..C-1} following
// the lexicographic order of the distinct raw label strings; row order and
// row numbers (as instance ids, starting at 0) are preserved.
inline LabeledDataset load_csv(const std::string& path,
                               const LabelColumn& label_column,
                               bool has_header) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open CSV file '" + path + "'");

  std::string line;
  std::size_t line_number = 0;
  std::vector<std::string> header;
  std::size_t label_index = 0;
  bool label_resolved = false;

  if (std::holds_alternative<std::size_t>(label_column)) {
    label_index = std::get<std::size_t>(label_column);
    label_resolved = true;
  }
  if (has_header) {
    if (!std::getline(in, line)) throw Error("CSV file '" + path + "' is empty");
    ++line_number;
    header = internal::split_csv_line(line);
    if (!label_resolved) {
      const auto& name = std::get<std::string>(label_column);
      auto it = std::find(header.begin(), header.end(), name);
      if (it == header.end()) {
        throw Error("label column '" + name + "' not found in header");
      }
      label_index = static_cast<std::size_t>(it - header.begin());
      label_resolved = true;
    }
  } else if (!label_resolved) {
    throw Error("a named label column requires a header row");
  }

  std::vector<std::vector<double>> rows;
  std::vector<std::string> raw_labels;
  std::size_t width = header.size();
  while (std::getline(in, line)) {
    ++line_number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto cells = internal::split_csv_line(line);
    if (width == 0) width = cells.size();
    if (cells.size() != width) {
      throw Error("line " + std::to_string(line_number) + ": expected " +
                  std::to_string(width) + " cells, found " +
                  std::to_string(cells.size()));
    }
    if (label_index >= width) {
      throw Error("label column index " + std::to_string(label_index) +
                  " out of range for " + std::to_string(width) + " columns");
    }
    std::vector<double> features;
    features.reserve(width - 1);
    for (std::size_t c = 0; c < width; ++c) {
      if (c == label_index) continue;
      const std::string& cell = cells[c];
      double value = 0.0;
      const char* begin = cell.data();
      const char* end = begin + cell.size();
      if (!cell.empty() && *begin == '+') ++begin;
      auto [ptr, ec] = std::from_chars(begin, end, value);
      if (cell.empty() || ec != std::errc() || ptr != end ||
          !std::isfinite(value)) {
        const std::string column =
            header.empty() ? std::to_string(c) : "'" + header[c] + "'";
        throw Error("line " + std::to_string(line_number) + ", column " +
                    column + ": cannot parse '" + cell +
                    "' as a finite number");
      }
      features.push_back(value);
    }
    rows.push_back(std::move(features));
    raw_labels.push_back(cells[label_index]);
  }

  const std::set<std::string> distinct(raw_labels.begin(), raw_labels.end());
  if (distinct.size() < 2) {
    throw Error("dataset '" + path + "' has fewer than two classes");
  }
  std::vector<std::string> names(distinct.begin(), distinct.end());
  std::map<std::string, int> code;
  for (std::size_t i = 0; i < names.size(); ++i) code[names[i]] = static_cast<int>(i);

  Matrix features(0, width - 1);
  std::vector<int> labels;
  std::vector<InstanceId> ids;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    features.append_row(rows[r]);
    labels.push_back(code[raw_labels[r]]);
    ids.push_back(r);
  }
  const int class_count = static_cast<int>(names.size());
  return LabeledDataset(std::move(features), std::move(labels), class_count,
                        std::move(ids), std::move(names));
}

// Largest-remainder apportionment of `total` by `fractions`; ties on the
// remainder go to the lower slot index.
inline std::vector<std::size_t> apportion(std::size_t total,
                                          std::span<const double> fractions) {
  std::vector<std::size_t> counts(fractions.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t s = 0; s < fractions.size(); ++s) {
    const double quota = static_cast<double>(total) * fractions[s];
    const double base = std::floor(quota + 1e-9);
    counts[s] = static_cast<std::size_t>(base);
    assigned += counts[s];
    remainders.emplace_back(quota - base, s);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < total; ++k, ++assigned) {
    ++counts[remainders[k % remainders.size()].second];
  }
  return counts;
}

// Splits into train/dev/test preserving the label distribution. Each class is
// shuffled with its own seeded stream and cut by largest-remainder counts.
inline DatasetSplit stratified_split(const LabeledDataset& ds,
                                     std::array<double, 3> fractions,
                                     std::uint64_t seed) {
  double sum = 0.0;
  for (double f : fractions) {
    if (!(f > 0.0)) throw Error("split fractions must all be positive");
    sum += f;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw Error("split fractions must sum to 1");

  std::vector<std::vector<std::size_t>> members(ds.class_count());
  for (std::size_t r = 0; r < ds.size(); ++r) members[ds.label(r)].push_back(r);

  DatasetSplit out;
  for (int c = 0; c < ds.class_count(); ++c) {
    auto& rows = members[c];
    if (rows.size() < 3) {
      throw Error("class " + std::to_string(c) + " has " +
                  std::to_string(rows.size()) +
                  " instances; at least 3 are needed for three splits");
    }
    const auto counts = apportion(rows.size(), fractions);
    for (std::size_t s = 0; s < 3; ++s) {
      if (counts[s] == 0) {
        throw Error("class " + std::to_string(c) +
                    " is too small to appear in every split");
      }
    }
    auto rng = unit_rng(seed, 0x5eed, static_cast<std::uint64_t>(c));
    std::shuffle(rows.begin(), rows.end(), rng);
    std::size_t offset = 0;
    for (std::size_t s = 0; s < 3; ++s) {
      out.rows[s].insert(out.rows[s].end(), rows.begin() + offset,
                         rows.begin() + offset + counts[s]);
      offset += counts[s];
    }
  }
  for (auto& rows : out.rows) std::sort(rows.begin(), rows.end());
  out.train = ds.subset(out.rows[0]);
  out.dev = ds.subset(out.rows[1]);
  out.test = ds.subset(out.rows[2]);
  return out;
}

inline ClassPartition partition_by_class(const LabeledDataset& ds, int y) {
  if (y < 0 || y >= ds.class_count()) {
    throw Error("unknown class " + std::to_string(y));
  }
  ClassPartition partition;
  partition.target_class = y;
  for (std::size_t r = 0; r < ds.size(); ++r) {
    (ds.label(r) == y ? partition.in_class : partition.out_of_class).push_back(r);
  }
  return partition;
}

// Flips exactly round(fraction * n) labels, chosen uniformly without
// replacement. Each flipped label is redrawn uniformly from the other C-1
// classes, so every flip is a real change.
inline std::pair<LabeledDataset, NoiseMask> inject_label_noise(
    const LabeledDataset& ds, double fraction, std::uint64_t seed,
    bool allow_empty = false) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw Error("noise fraction must lie strictly between 0 and 1");
  }
  const auto flips = static_cast<std::size_t>(
      std::llround(fraction * static_cast<double>(ds.size())));
  if (flips == 0 && !allow_empty) {
    throw Error("noise fraction rounds to zero flipped instances");
  }
  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto rng = unit_rng(seed, 0x4015e, 0);
  std::shuffle(order.begin(), order.end(), rng);

  NoiseMask mask;
  mask.fraction = fraction;
  mask.original_labels = ds.labels();
  mask.flipped.assign(ds.size(), false);
  std::vector<int> labels = ds.labels();
  std::uniform_int_distribution<int> other(0, ds.class_count() - 2);
  for (std::size_t k = 0; k < flips; ++k) {
    const std::size_t r = order[k];
    const int draw = other(rng);
    labels[r] = draw >= labels[r] ? draw + 1 : draw;
    mask.flipped[r] = true;
  }
  return {ds.with_labels(std::move(labels)), std::move(mask)};
}

inline LabeledDataset restore_labels(const LabeledDataset& noisy,
                                     const NoiseMask& mask) {
  return noisy.with_labels(mask.original_labels);
}

// Per-column standardization with statistics taken from one dataset.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;

  static Standardizer fit(const LabeledDataset& ds) {
    const std::size_t d = ds.feature_count();
    Standardizer s{std::vector<double>(d, 0.0), std::vector<double>(d, 1.0)};
    if (ds.empty()) return s;
    const double n = static_cast<double>(ds.size());
    for (std::size_t r = 0; r < ds.size(); ++r) {
      for (std::size_t c = 0; c < d; ++c) s.mean[c] += ds.features()(r, c);
    }
    for (double& m : s.mean) m /= n;
    std::vector<double> var(d, 0.0);
    for (std::size_t r = 0; r < ds.size(); ++r) {
      for (std::size_t c = 0; c < d; ++c) {
        const double dev = ds.features()(r, c) - s.mean[c];
        var[c] += dev * dev;
      }
    }
    for (std::size_t c = 0; c < d; ++c) {
      const double sd = std::sqrt(var[c] / n);
      s.scale[c] = sd > 0.0 ? sd : 1.0;
    }
    return s;
  }

  LabeledDataset apply(const LabeledDataset& ds) const {
    Matrix x = ds.features();
    for (std::size_t r = 0; r < x.rows(); ++r) {
      for (std::size_t c = 0; c < x.cols(); ++c) {
        x(r, c) = (x(r, c) - mean[c]) / scale[c];
      }
    }
    return ds.with_features(std::move(x));
  }
};

inline nlohmann::ordered_json noise_mask_to_json(const LabeledDataset& noisy,
                                                 const NoiseMask& mask) {
  nlohmann::ordered_json flipped = nlohmann::ordered_json::array();
  for (std::size_t r = 0; r < mask.flipped.size(); ++r) {
    if (!mask.flipped[r]) continue;
    flipped.push_back({{"instance_id", noisy.instance_ids()[r]},
                       {"original_label", mask.original_labels[r]},
                       {"noisy_label", noisy.label(r)}});
  }
  return {{"fraction", mask.fraction},
          {"flipped_count", mask.flipped_count()},
          {"flipped", std::move(flipped)}};
}

inline nlohmann::ordered_json split_to_json(const DatasetSplit& split) {
  auto ids = [](const LabeledDataset& ds) {
    return nlohmann::ordered_json(ds.instance_ids());
  };
  return {{"label_encoding", split.train.label_names()},
          {"train", ids(split.train)},
          {"dev", ids(split.dev)},
          {"test", ids(split.test)}};
}

}  // namespace csshap

#endif  // CSSHAP_DATA_HPP
