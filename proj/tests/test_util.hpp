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

#ifndef CSSHAP_TESTS_TEST_UTIL_HPP
#define CSSHAP_TESTS_TEST_UTIL_HPP

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "csshap/csshap.hpp"

namespace csshap::testing {

// Two isotropic Gaussian blobs in 2-D centred at (-sep, 0) and (+sep, 0),
// rows interleaved by class. Ids start at `first_id`.
inline LabeledDataset gaussian_blobs(std::size_t per_class, double separation, double spread,
                                     std::uint64_t seed, InstanceId first_id = 0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, spread);
  Matrix x(0, 2);
  std::vector<int> labels;
  std::vector<InstanceId> ids;
  for (std::size_t i = 0; i < per_class; ++i) {
    for (int c = 0; c < 2; ++c) {
      const double centre = c == 0 ? -separation : separation;
      const double row[2] = {centre + noise(rng), noise(rng)};
      x.append_row(row);
      labels.push_back(c);
      ids.push_back(first_id + ids.size());
    }
  }
  return LabeledDataset(std::move(x), std::move(labels), 2, std::move(ids));
}

// Fixed eight-point two-class training set and a twelve-point dev set used by
// the convergence tests.
inline LabeledDataset toy_train8() {
  Matrix x(0, 2);
  const double rows[8][2] = {{-2.0, 0.3}, {-1.2, -0.8}, {-0.4, 0.9}, {0.6, -0.2},
                             {2.1, 0.4},  {1.3, -1.1},  {0.3, 0.8},  {-0.7, -0.5}};
  for (const auto& r : rows) x.append_row(r);
  return LabeledDataset::with_sequential_ids(std::move(x), {0, 0, 0, 0, 1, 1, 1, 1}, 2);
}

inline LabeledDataset toy_dev12() {
  Matrix x(0, 2);
  const double rows[12][2] = {{-1.8, 0.1}, {-1.0, 0.5}, {-0.5, -0.9}, {-0.2, 0.2},
                              {-1.5, -0.4}, {0.1, -0.6}, {1.9, 0.2},  {1.1, -0.3},
                              {0.5, 0.7},  {0.2, -0.1}, {1.4, 0.9},   {-0.1, 0.4}};
  for (const auto& r : rows) x.append_row(r);
  std::vector<InstanceId> ids(12);
  std::iota(ids.begin(), ids.end(), InstanceId{1000});
  return LabeledDataset(std::move(x), {0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 1}, 2, std::move(ids));
}

inline ClassifierSpec logistic_spec() {
  return ClassifierSpec::defaults(ClassifierKind::kLogisticRegression);
}

inline ClassifierSpec knn_spec(int k) {
  auto spec = ClassifierSpec::defaults(ClassifierKind::kKnn);
  spec.k = k;
  return spec;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("csshap_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// Shapley values by enumerating all n! orderings; independent of the
// coalition-enumeration code path.
inline std::vector<double> shapley_by_permutations(int n, const std::vector<double>& table,
                                                   const std::vector<double>& position_weight = {}) {
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> phi(n, 0.0);
  double count = 0.0;
  do {
    Coalition mask = 0;
    for (int j = 0; j < n; ++j) {
      const Coalition next = mask | (Coalition{1} << order[j]);
      const double w = position_weight.empty() ? 1.0 : position_weight[j];
      phi[order[j]] += w * (table[next] - table[mask]);
      mask = next;
    }
    count += 1.0;
  } while (std::next_permutation(order.begin(), order.end()));
  for (double& v : phi) v /= count;
  return phi;
}

}  // namespace csshap::testing

#endif  // CSSHAP_TESTS_TEST_UTIL_HPP
