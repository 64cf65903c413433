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

#ifndef CSSHAP_SUBSET_CACHE_HPP
#define CSSHAP_SUBSET_CACHE_HPP

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "csshap/common.hpp"
#include "csshap/data.hpp"
#include "csshap/models.hpp"

namespace csshap {

// Memo of per-class correct counts on a fixed dev set, keyed by the set of
// training instance ids a model was fitted on. One cache serves exactly one
// (train, dev, classifier) context, identified by context_digest().
class SubsetAccuracyCache {
 public:
  using Key = std::vector<InstanceId>;  // sorted
  using Counts = std::vector<std::size_t>;

  explicit SubsetAccuracyCache(std::string context_digest = {})
      : context_(std::move(context_digest)) {}

  const std::string& context_digest() const { return context_; }

  std::optional<Counts> find(const Key& key) const {
    std::lock_guard lock(mutex_);
    auto it = table_.find(key);
    if (it == table_.end()) return std::nullopt;
    ++hits_;
    return it->second;
  }

  void insert(Key key, Counts counts) {
    std::lock_guard lock(mutex_);
    table_.emplace(std::move(key), std::move(counts));
  }

  std::size_t size() const {
    std::lock_guard lock(mutex_);
    return table_.size();
  }
  std::size_t hits() const { return hits_.load(); }

  // Entries are written sorted by key so the file is reproducible.
  void save(const std::filesystem::path& file) const {
    std::vector<std::pair<Key, Counts>> entries;
    {
      std::lock_guard lock(mutex_);
      entries.assign(table_.begin(), table_.end());
    }
    std::sort(entries.begin(), entries.end());
    nlohmann::json j;
    j["context"] = context_;
    j["entries"] = nlohmann::json::array();
    for (auto& [key, counts] : entries) {
      j["entries"].push_back({{"ids", key}, {"correct", counts}});
    }
    std::filesystem::create_directories(file.parent_path());
    std::ofstream out(file);
    if (!out) throw Error("cannot write cache file '" + file.string() + "'");
    out << j.dump() << '\n';
  }

  // Loads entries from `file` if it exists and belongs to this context.
  bool load(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) return false;
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception&) {
      throw Error("corrupt cache file '" + file.string() + "'");
    }
    if (j.value("context", std::string()) != context_) return false;
    std::lock_guard lock(mutex_);
    for (const auto& e : j.at("entries")) {
      table_.emplace(e.at("ids").get<Key>(), e.at("correct").get<Counts>());
    }
    return true;
  }

 private:
  // Order-insensitive by construction: keys are sorted, and the mix commutes.
  struct KeyHash {
    std::size_t operator()(const Key& key) const {
      std::uint64_t h = 0x9e3779b97f4a7c15ULL ^ key.size();
      for (InstanceId id : key) {
        std::uint64_t z = id + 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        h += z ^ (z >> 31);
      }
      return static_cast<std::size_t>(h);
    }
  };

  std::string context_;
  mutable std::mutex mutex_;
  std::unordered_map<Key, Counts, KeyHash> table_;
  mutable std::atomic<std::size_t> hits_{0};
};

inline std::string cache_context_digest(const LabeledDataset& train,
                                        const LabeledDataset& dev,
                                        const ClassifierSpec& spec) {
  return sha256_hex(train.digest() + dev.digest() + to_json(spec).dump());
}

// Fits the classifier on a subset of training rows and scores it on the dev
// set, optionally through a cache.
class SubsetEvaluator {
 public:
  SubsetEvaluator(const LabeledDataset& train, const LabeledDataset& dev,
                  ClassifierSpec spec, SubsetAccuracyCache* cache = nullptr)
      : train_(train), dev_(dev), spec_(std::move(spec)), cache_(cache) {
    if (dev_.empty()) throw Error("development set is empty");
    if (train_.feature_count() != dev_.feature_count()) {
      throw Error("train and dev feature counts differ");
    }
    spec_.validate();
    if (cache_ != nullptr && !cache_->context_digest().empty() &&
        cache_->context_digest() != cache_context_digest(train_, dev_, spec_)) {
      throw Error("subset cache belongs to a different train/dev/classifier context");
    }
  }

  const LabeledDataset& train() const { return train_; }
  const LabeledDataset& dev() const { return dev_; }
  const ClassifierSpec& spec() const { return spec_; }
  std::size_t dev_size() const { return dev_.size(); }
  std::size_t fits() const { return fits_.load(); }

  // Correct dev predictions per true class for a model fitted on `rows`.
  std::vector<std::size_t> correct_counts(std::span<const std::size_t> rows) const {
    if (cache_ == nullptr) return compute(rows);
    SubsetAccuracyCache::Key key;
    key.reserve(rows.size());
    for (std::size_t r : rows) key.push_back(train_.instance_ids().at(r));
    std::sort(key.begin(), key.end());
    if (auto hit = cache_->find(key)) return *hit;
    auto counts = compute(rows);
    cache_->insert(std::move(key), counts);
    return counts;
  }

  double accuracy(std::span<const std::size_t> rows) const {
    std::size_t correct = 0;
    for (std::size_t c : correct_counts(rows)) correct += c;
    return static_cast<double>(correct) / static_cast<double>(dev_.size());
  }

  AccuracyPair class_pair(std::span<const std::size_t> rows, int y) const {
    return AccuracyPair::from_class_counts(correct_counts(rows), dev_.size(), y);
  }

 private:
  std::vector<std::size_t> compute(std::span<const std::size_t> rows) const {
    ++fits_;
    return correct_by_class(fit(spec_, train_, rows), dev_);
  }

  const LabeledDataset& train_;
  const LabeledDataset& dev_;
  ClassifierSpec spec_;
  SubsetAccuracyCache* cache_;
  mutable std::atomic<std::size_t> fits_{0};
};

}  // namespace csshap

#endif  // CSSHAP_SUBSET_CACHE_HPP
