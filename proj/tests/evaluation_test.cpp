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

#include "csshap/evaluation.hpp"

#include <gtest/gtest.h>

#include "test_util.hpp"

namespace csshap {
namespace {

RemovalCurve curve_of(double baseline, const std::vector<double>& accuracies) {
  RemovalCurve curve;
  curve.baseline_accuracy = baseline;
  for (std::size_t j = 0; j < accuracies.size(); ++j) {
    curve.steps.push_back({static_cast<double>(j + 1) / 10.0, accuracies[j], j + 1});
  }
  return curve;
}

ValuationResult values_for(const LabeledDataset& train, std::vector<double> values) {
  ValuationResult r;
  r.instance_ids = train.instance_ids();
  r.values = std::move(values);
  r.method = "manual";
  r.classifier = testing::logistic_spec();
  r.diagnostics.sample_counts.assign(r.values.size(), 1);
  return r;
}

NoiseMask mask_of(const std::vector<bool>& flipped) {
  NoiseMask mask;
  mask.flipped = flipped;
  mask.original_labels.assign(flipped.size(), 0);
  return mask;
}

TEST(Wad, HandExample) {
  const auto curve = curve_of(0.9, {0.8, 0.7, 0.7});
  EXPECT_NEAR(wad(curve), 0.1 + 0.2 / 2 + 0.2 / 3, 1e-12);
  EXPECT_NEAR(wad(curve), 0.26666666666666666, 1e-12);
  EXPECT_NEAR(wad_telescoped(curve), wad(curve), 1e-12);
}

TEST(Wad, FlatAndNegative) {
  EXPECT_EQ(wad(curve_of(0.8, {0.8, 0.8, 0.8, 0.8})), 0.0);
  EXPECT_LT(wad(curve_of(0.8, {0.81, 0.82})), 0.0);
  EXPECT_EQ(wad(curve_of(0.8, {})), 0.0);
}

TEST(Wad, TelescopedIdentityOnRandomCurves) {
  std::mt19937_64 rng(44);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 1000; ++t) {
    std::vector<double> acc(1 + rng() % 200);
    for (auto& a : acc) a = u(rng);
    const auto curve = curve_of(u(rng), acc);
    ASSERT_NEAR(wad(curve), wad_telescoped(curve), 1e-12);
  }
}

TEST(Wad, RequiresUnitStep) {
  auto curve = curve_of(0.9, {0.8});
  curve.step = 2;
  EXPECT_THROW(wad(curve), Error);
  EXPECT_THROW(wad_telescoped(curve), Error);
}

TEST(DetectNoise, PerfectRetrieval) {
  const auto train = testing::gaussian_blobs(5, 1.0, 1.0, 1);
  const auto report = detect_noise(
      values_for(train, {0.1, 5, 5, 5, 0.2, 5, 5, 5, 5, 5}),
      mask_of({true, false, false, false, true, false, false, false, false, false}));
  EXPECT_DOUBLE_EQ(report.auc, 1.0);
  EXPECT_EQ(report.inspection_order.front(), 0u);
  EXPECT_EQ(report.inspection_order[1], 4u);
  EXPECT_EQ(report.pr_points.back().recall, 1.0);
  EXPECT_DOUBLE_EQ(report.pr_points.back().precision, 0.2);
}

TEST(DetectNoise, WorstRetrieval) {
  const auto train = testing::gaussian_blobs(5, 1.0, 1.0, 1);
  const auto report = detect_noise(
      values_for(train, {1, 2, 3, 4, 5, 6, 7, 8, 9, 10}),
      mask_of({false, false, false, false, false, false, false, false, true, true}));
  EXPECT_NEAR(report.auc, 0.5 * (1.0 / 9.0) + 0.5 * (2.0 / 10.0), 1e-15);
  EXPECT_NEAR(report.auc, 0.15555555555555556, 1e-15);
}

TEST(DetectNoise, RandomRankingAveragesNoiseFraction) {
  const std::size_t n = 500;
  const auto train = LabeledDataset::with_sequential_ids(
      Matrix(n, 1), std::vector<int>(n, 0), 2);
  std::vector<bool> flipped(n, false);
  for (std::size_t i = 0; i < n / 5; ++i) flipped[i * 5] = true;
  const auto mask = mask_of(flipped);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double total = 0.0;
  for (int t = 0; t < 1000; ++t) {
    std::vector<double> values(n);
    for (auto& v : values) v = u(rng);
    total += detect_noise(values_for(train, values), mask).auc;
  }
  EXPECT_NEAR(total / 1000.0, 0.2, 0.02);
}

TEST(DetectNoise, TiesInspectAscendingIdAndCurveInvariants) {
  const auto train = testing::gaussian_blobs(5, 1.0, 1.0, 1);
  const auto report = detect_noise(values_for(train, std::vector<double>(10, 0.5)),
                                   mask_of({false, true, false, false, false, false, false,
                                            false, false, true}));
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(report.inspection_order[i], i);
  for (std::size_t i = 1; i < report.pr_points.size(); ++i) {
    EXPECT_GE(report.pr_points[i].recall, report.pr_points[i - 1].recall);
  }
  EXPECT_GE(report.auc, 0.0);
  EXPECT_LE(report.auc, 1.0);
  EXPECT_THROW(detect_noise(values_for(train, std::vector<double>(10, 0.5)),
                            mask_of(std::vector<bool>(10, false))),
               Error);
  EXPECT_THROW(detect_noise(values_for(train, std::vector<double>(10, 0.5)),
                            mask_of(std::vector<bool>(9, true))),
               Error);
}

TEST(RemovalCurve, TieOrderAndNegation) {
  const auto train = testing::gaussian_blobs(10, 2.0, 1.0, 2);
  const auto test = testing::gaussian_blobs(20, 2.0, 1.0, 3, 500);
  const auto tied = removal_curve(values_for(train, std::vector<double>(20, 1.0)), train, test,
                                  testing::logistic_spec());
  for (std::size_t i = 0; i < 20; ++i) EXPECT_EQ(tied.order[i], i);
  EXPECT_EQ(tied.steps.size(), 10u);
  EXPECT_DOUBLE_EQ(tied.steps.back().fraction_removed, 0.5);

  std::vector<double> values(20);
  std::mt19937_64 rng(8);
  for (auto& v : values) v = std::uniform_real_distribution<double>(-1, 1)(rng);
  std::vector<double> negated(values);
  for (auto& v : negated) v = -v;
  const auto up = removal_curve(values_for(train, values), train, test, testing::logistic_spec(),
                                1, 1.0);
  const auto down = removal_curve(values_for(train, negated), train, test,
                                  testing::logistic_spec(), 1, 1.0);
  EXPECT_EQ(up.order, std::vector<InstanceId>(down.order.rbegin(), down.order.rend()));
}

TEST(RemovalCurve, SingleRetrainWhenStepSpansCap) {
  const auto train = testing::gaussian_blobs(10, 2.0, 1.0, 2);
  const auto test = testing::gaussian_blobs(20, 2.0, 1.0, 3, 500);
  const auto curve = removal_curve(values_for(train, std::vector<double>(20, 0.0)), train, test,
                                   testing::logistic_spec(), 10, 0.5);
  ASSERT_EQ(curve.steps.size(), 1u);
  EXPECT_EQ(curve.steps[0].removed, 10u);
  EXPECT_THROW(to_json(curve)["wad"].get<double>(), nlohmann::json::exception);
}

TEST(RemovalCurve, StopsBeforeEmptyingAClass) {
  Matrix x(0, 1);
  for (double v : {0.0, 1.0, 2.0, 3.0, 10.0, 11.0}) x.append_row(std::span<const double>(&v, 1));
  const auto train = LabeledDataset::with_sequential_ids(x, {0, 0, 0, 0, 1, 1}, 2);
  const auto curve = removal_curve(values_for(train, {0, 0, 0, 0, 9, 8}), train, train,
                                   testing::knn_spec(1), 1, 0.5);
  EXPECT_TRUE(curve.truncated);
  EXPECT_EQ(curve.steps.size(), 1u);
  EXPECT_NE(curve.diagnostic.find("class 1"), std::string::npos);
}

TEST(RemovalCurve, GoodRankingDropsFasterThanRandom) {
  // 1-NN on blobs with 30% planted label errors: removing the clean points
  // first leaves mostly mislabeled data behind.
  const auto clean = testing::gaussian_blobs(50, 1.5, 1.0, 31);
  const auto test = testing::gaussian_blobs(100, 1.5, 1.0, 32, 1000);
  const auto [noisy, mask] = inject_label_noise(clean, 0.3, 5);
  std::vector<double> oracle(noisy.size());
  for (std::size_t i = 0; i < oracle.size(); ++i) oracle[i] = mask.flipped[i] ? 0.0 : 1.0;
  const auto good = removal_curve(values_for(noisy, oracle), noisy, test, testing::knn_spec(1));
  const auto random = removal_curve(random_values(noisy, testing::knn_spec(1), 4), noisy, test,
                                    testing::knn_spec(1));
  EXPECT_GT(wad(good), wad(random));
  EXPECT_LT(good.steps.back().accuracy, random.steps.back().accuracy);
}

TEST(RemovalCurve, RejectsBadArguments) {
  const auto train = testing::gaussian_blobs(5, 2.0, 1.0, 2);
  const auto v = values_for(train, std::vector<double>(10, 0.0));
  EXPECT_THROW(removal_curve(v, train, train, testing::logistic_spec(), 0), Error);
  EXPECT_THROW(removal_curve(v, train, train, testing::logistic_spec(), 1, 0.0), Error);
  EXPECT_THROW(removal_curve(values_for(train, std::vector<double>(9, 0.0)), train, train,
                             testing::logistic_spec()),
               Error);
}

TEST(Transfer, SameTargetReproducesRemovalCurve) {
  const auto train = testing::gaussian_blobs(15, 1.0, 1.0, 6);
  const auto test = testing::gaussian_blobs(15, 1.0, 1.0, 7, 500);
  const auto values = random_values(train, testing::logistic_spec(), 3);
  const auto report = transfer_eval(values, train, test, testing::logistic_spec());
  EXPECT_EQ(report.kind(), EvaluationKind::kTransfer);
  const auto& payload = std::get<TransferReport>(report.payload());
  EXPECT_EQ(payload.curve, removal_curve(values, train, test, testing::logistic_spec()));
  EXPECT_EQ(to_json(payload.curve).dump(),
            to_json(removal_curve(values, train, test, testing::logistic_spec())).dump());
  EXPECT_EQ(report.provenance().dataset_digest, train.digest());

  auto mlp = ClassifierSpec::defaults(ClassifierKind::kMlp);
  const auto other = transfer_eval(values, train, test, mlp);
  EXPECT_EQ(std::get<TransferReport>(other.payload()).target, mlp);
  EXPECT_EQ(to_json(other)["kind"], "transfer");
}

TEST(Csv, Formats) {
  const auto curve = curve_of(0.9, {0.8, 0.75});
  EXPECT_EQ(curve_csv(curve), "fraction_removed,accuracy\n0,0.9\n0.1,0.8\n0.2,0.75\n");
  DetectionReport report;
  report.pr_points = {{0.5, 1.0}, {1.0, 0.5}};
  EXPECT_EQ(pr_csv(report), "recall,precision\n0.5,1\n1,0.5\n");
}

}  // namespace
}  // namespace csshap
