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

// Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Run a subset with e.g. `acceptance 3 4`.

#include <chrono>
#include <cstdlib>
#include <functional>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>

#include "test_util.hpp"

namespace csshap {
namespace {

namespace fs = std::filesystem;

struct Verdict {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v, int precision = 4) {
  std::ostringstream out;
  out << std::setprecision(precision) << v;
  return out.str();
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

double mean(const std::vector<double>& v) {
  double total = 0.0;
  for (double x : v) total += x;
  return v.empty() ? 0.0 : total / static_cast<double>(v.size());
}

// 1. Axioms of exact Shapley on synthetic tables and classifier games.
Verdict axioms() {
  const auto start = Clock::now();
  std::mt19937_64 rng(20260);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst_efficiency = 0.0, worst_linearity = 0.0;
  bool symmetric = true, null = true;
  int games = 0;

  auto check_linearity = [&](int n, const std::vector<double>& v, const std::vector<double>& w) {
    std::vector<double> sum(v.size());
    for (std::size_t s = 0; s < v.size(); ++s) sum[s] = v[s] + w[s];
    const auto pv = exact_shapley_from_table(n, v);
    const auto pw = exact_shapley_from_table(n, w);
    const auto ps = exact_shapley_from_table(n, sum);
    for (int i = 0; i < n; ++i) worst_linearity = std::max(worst_linearity, std::abs(ps[i] - pv[i] - pw[i]));
  };

  // Synthetic tables with a planted null player 0 and symmetric pair (1, 2).
  for (int t = 0; t < 12; ++t) {
    const int n = 3 + t % 6;
    std::vector<double> table(std::size_t{1} << n), other(table.size());
    for (auto& v : table) v = u(rng);
    for (auto& v : other) v = u(rng);
    for (Coalition s = 0; s < table.size(); ++s) {
      if (s & 1) table[s] = table[s & ~Coalition{1}];
    }
    for (Coalition s = 0; s < table.size(); ++s) {
      if ((s & 2) && !(s & 4)) table[s] = table[(s & ~Coalition{2}) | 4];
    }
    const auto phi = exact_shapley_from_table(n, table);
    double total = 0.0;
    for (double p : phi) total += p;
    worst_efficiency = std::max(worst_efficiency, std::abs(total - (table.back() - table.front())));
    symmetric = symmetric && phi[1] == phi[2];
    null = null && phi[0] == 0.0;
    check_linearity(n, table, other);
    ++games;
  }

  // Classifier games: six random points, a duplicate of point 0 (symmetric
  // with it) and a far-away point that no 1-NN prediction ever uses (null).
  for (int t = 0; t < 10; ++t) {
    auto base = testing::gaussian_blobs(3, 1.0, 1.0, 100 + t);
    Matrix x = base.features();
    std::vector<int> labels = base.labels();
    const double dup[2] = {x(0, 0), x(0, 1)};
    const double far[2] = {500.0, -500.0};
    x.append_row(dup);
    labels.push_back(labels[0]);
    x.append_row(far);
    labels.push_back(0);
    const auto train = LabeledDataset::with_sequential_ids(x, labels, 2);
    const auto dev = testing::gaussian_blobs(10, 1.0, 1.0, 200 + t, 1000);
    const auto spec = testing::knn_spec(1);
    const auto result = exact_shapley(train, dev, spec);
    const auto& phi = result.values;
    const double full = overall_value(fit(spec, train), dev);
    const double empty = overall_value(fit(spec, train, std::span<const std::size_t>{}), dev);
    double total = 0.0;
    for (double p : phi) total += p;
    worst_efficiency = std::max(worst_efficiency, std::abs(total - (full - empty)));
    symmetric = symmetric && phi[0] == phi[6];
    null = null && phi[7] == 0.0;

    const SubsetEvaluator knn(train, dev, spec);
    const SubsetEvaluator lr(train, dev, testing::logistic_spec());
    auto table_of = [&](const SubsetEvaluator& eval) {
      return utility_table(8, [&](Coalition s) {
        std::vector<std::size_t> rows;
        for (int i = 0; i < 8; ++i) {
          if (s & (Coalition{1} << i)) rows.push_back(static_cast<std::size_t>(i));
        }
        return eval.accuracy(rows);
      });
    };
    check_linearity(8, table_of(knn), table_of(lr));
    ++games;
  }

  const double elapsed = seconds_since(start);
  const bool pass = games >= 20 && worst_efficiency <= 1e-10 && symmetric && null &&
                    worst_linearity <= 1e-10 && elapsed < 60.0;
  return {pass, std::to_string(games) + " games; efficiency err " + fmt(worst_efficiency) +
                    ", symmetry " + (symmetric ? "exact" : "BROKEN") + ", null " +
                    (null ? "exact" : "BROKEN") + ", linearity err " + fmt(worst_linearity) +
                    ", " + fmt(elapsed, 3) + " s"};
}

// 2. Sampled estimators against their exact oracles on the n = 8 toy set.
Verdict convergence() {
  const auto start = Clock::now();
  const auto train = testing::toy_train8(), dev = testing::toy_dev12();
  const auto spec = testing::logistic_spec();
  SubsetAccuracyCache cache(cache_context_digest(train, dev, spec));
  const ExecutionOptions exec{1, &cache};

  const auto exact = exact_shapley(train, dev, spec);
  EstimatorConfig tmc_cfg;
  tmc_cfg.truncation_tolerance = 0.0;
  tmc_cfg.max_permutations = 50000;
  tmc_cfg.convergence_threshold = 0.0;
  const auto tmc = tmc_shapley(train, dev, spec, ValueFunctionConfig::overall_accuracy(), tmc_cfg,
                               1, exec);
  const double tmc_err = max_abs_diff(tmc.values, exact.values);

  EstimatorConfig cs_cfg;
  cs_cfg.normalization = Normalization::kNone;
  const auto exact_cs = exact_cs_shapley(train, dev, spec, {}, cs_cfg, exec);
  cs_cfg.environments = 2000;
  cs_cfg.permutations_per_environment = 1;
  cs_cfg.truncation_tolerance = 0.0;
  const auto cs = cs_shapley(train, dev, spec, {}, cs_cfg, 1, exec);
  const double cs_err = max_abs_diff(cs.values, exact_cs.values);

  const double elapsed = seconds_since(start);
  const bool pass = tmc.budget.permutations >= 50000 && tmc_err <= 0.01 && cs_err <= 0.02 &&
                    elapsed < 600.0;
  return {pass, "TMC 50000 perms max err " + fmt(tmc_err) + " (<= 0.01); CS K=2000 P=1 max err " +
                    fmt(cs_err) + " (<= 0.02); " + fmt(elapsed, 3) + " s"};
}

// 3. Value-function properties.
Verdict properties() {
  const auto start = Clock::now();
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const ValueFunctionConfig cfg;
  std::vector<double> samples(10000);
  for (auto& a : samples) a = 1.0 - u(rng);  // (0, 1]
  const bool p1 = check_property1(cfg, samples);
  bool p2 = true;
  for (int t = 0; t < 100000 && p2; ++t) {
    const double a = u(rng), b = u(rng);
    const double a1 = a * u(rng), b1 = b * u(rng);
    p2 = check_property2(cfg, a1, a - a1, b1, b - b1);
  }
  bool contour = true;
  for (int j = 0; j <= 100000; ++j) contour = contour && cs_value(0.0, j / 100000.0, cfg) == 0.0;
  const double elapsed = seconds_since(start);
  return {p1 && p2 && contour && elapsed < 10.0,
          std::string("property 1 over 1e4 samples ") + (p1 ? "holds" : "FAILS") +
              ", property 2 over 1e5 quadruples " + (p2 ? "holds" : "FAILS") +
              ", cs_value(0, b) = 0 on 100001-point grid " + (contour ? "holds" : "FAILS") +
              "; " + fmt(elapsed, 3) + " s"};
}

// 4. WAD double sum vs telescoped form, and the hand example.
Verdict wad_identity() {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    RemovalCurve curve;
    curve.baseline_accuracy = u(rng);
    const std::size_t m = 1 + rng() % 100;
    for (std::size_t j = 1; j <= m; ++j) curve.steps.push_back({j / 200.0, u(rng), j});
    worst = std::max(worst, std::abs(wad(curve) - wad_telescoped(curve)));
  }
  RemovalCurve hand;
  hand.baseline_accuracy = 0.9;
  hand.steps = {{0.1, 0.8, 1}, {0.2, 0.7, 2}, {0.3, 0.7, 3}};
  const double example = wad(hand);
  // 0.1/1 + 0.2/2 + 0.2/3 = 4/15; the quoted 0.26667 is this value rounded.
  const double expected = 4.0 / 15.0;
  return {worst <= 1e-12 && std::abs(example - expected) <= 1e-6,
          "max |double sum - telescoped| over 1000 curves " + fmt(worst) + ", hand example " +
              fmt(example, 8) + " (expected 4/15 = 0.26667)"};
}

struct BlobSeed {
  LabeledDataset train;  // labels possibly flipped
  LabeledDataset dev;
  LabeledDataset test;
  NoiseMask mask;
};

BlobSeed blob_setup(std::uint64_t seed, double noise) {
  const auto clean = testing::gaussian_blobs(100, 1.5, 1.0, 1000 + seed);
  auto [noisy, mask] = inject_label_noise(clean, noise, seed);
  return {std::move(noisy), testing::gaussian_blobs(100, 1.5, 1.0, 2000 + seed, 10000),
          testing::gaussian_blobs(100, 1.5, 1.0, 3000 + seed, 20000), std::move(mask)};
}

// 5. Noisy-label detection on blobs.
Verdict noise_detection() {
  const auto start = Clock::now();
  const auto spec = testing::logistic_spec();
  std::vector<double> cs_auc, loo_auc;
  bool separated = true;
  std::string per_seed;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto s = blob_setup(seed, 0.2);
    SubsetAccuracyCache cache;
    const ExecutionOptions exec{1, &cache};
    const auto cs = cs_shapley(s.train, s.dev, spec, {}, {}, seed, exec);
    const auto lo = loo(s.train, s.dev, spec, ValueFunctionConfig::overall_accuracy(), exec);
    cs_auc.push_back(detect_noise(cs, s.mask).auc);
    loo_auc.push_back(detect_noise(lo, s.mask).auc);
    std::vector<double> flipped, clean;
    for (std::size_t i = 0; i < cs.values.size(); ++i) {
      (s.mask.flipped[i] ? flipped : clean).push_back(cs.values[i]);
    }
    separated = separated && mean(flipped) < mean(clean);
    per_seed += " " + fmt(cs_auc.back(), 3);
  }
  const double elapsed = seconds_since(start);
  const bool pass = mean(cs_auc) >= 0.2 + 0.1 && mean(cs_auc) > mean(loo_auc) && separated &&
                    elapsed < 1800.0;
  return {pass, "CS-Shapley mean AUC " + fmt(mean(cs_auc)) + " (per seed" + per_seed +
                    "), LOO mean AUC " + fmt(mean(loo_auc)) + ", flipped mean value below clean in " +
                    (separated ? "every seed" : "NOT every seed") + "; " + fmt(elapsed, 3) + " s"};
}

struct RemovalRun {
  std::vector<double> cs_wad, random_wad;
  std::vector<double> cs_drop25, random_drop25;
  bool transfer_identical = true;
};

double drop_at(const RemovalCurve& curve, double fraction) {
  for (const auto& step : curve.steps) {
    if (step.fraction_removed >= fraction - 1e-12) return curve.baseline_accuracy - step.accuracy;
  }
  return curve.baseline_accuracy - curve.steps.back().accuracy;
}

// Shared by criteria 6 and 7: blobs with 10% planted mislabeled points,
// valued by LR-sourced CS-Shapley.
const RemovalRun& removal_runs() {
  static const RemovalRun run = [] {
    RemovalRun r;
    const auto lr = testing::logistic_spec();
    auto mlp = ClassifierSpec::defaults(ClassifierKind::kMlp);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto s = blob_setup(seed, 0.1);
      SubsetAccuracyCache cache;
      const auto cs = cs_shapley(s.train, s.dev, lr, {}, {}, seed, {1, &cache});
      const auto random = random_values(s.train, lr, seed);
      const auto cs_curve = removal_curve(cs, s.train, s.test, lr);
      r.cs_wad.push_back(wad(cs_curve));
      r.random_wad.push_back(wad(removal_curve(random, s.train, s.test, lr)));

      mlp.seed = seed;
      r.cs_drop25.push_back(drop_at(removal_curve(cs, s.train, s.test, mlp, 1, 0.25), 0.25));
      r.random_drop25.push_back(
          drop_at(removal_curve(random, s.train, s.test, mlp, 1, 0.25), 0.25));

      const auto same = transfer_eval(cs, s.train, s.test, lr);
      const auto& curve = std::get<TransferReport>(same.payload()).curve;
      r.transfer_identical = r.transfer_identical && curve == cs_curve &&
                             to_json(curve).dump() == to_json(cs_curve).dump();
    }
    return r;
  }();
  return run;
}

// 6. High-value removal beats random removal.
Verdict removal() {
  const auto start = Clock::now();
  const auto& r = removal_runs();
  int wins = 0;
  std::string detail;
  for (std::size_t i = 0; i < r.cs_wad.size(); ++i) {
    wins += r.cs_wad[i] > r.random_wad[i];
    detail += " " + fmt(r.cs_wad[i], 3) + "/" + fmt(r.random_wad[i], 3);
  }
  return {wins >= 4, "CS-Shapley WAD > random WAD in " + std::to_string(wins) +
                         " of 5 seeds (cs/random:" + detail + "); " + fmt(seconds_since(start), 3) +
                         " s"};
}

// 7. Transfer of LR-sourced values to an MLP target.
Verdict transfer() {
  const auto start = Clock::now();
  const auto& r = removal_runs();
  const double cs = mean(r.cs_drop25), random = mean(r.random_drop25);
  return {cs > random && r.transfer_identical,
          "MLP accuracy drop at 25% removal: CS-Shapley order " + fmt(cs) + " vs random order " +
              fmt(random) + "; target==source curves " +
              (r.transfer_identical ? "bit-identical" : "DIFFER") + "; " +
              fmt(seconds_since(start), 3) + " s (runs shared with criterion 6)"};
}

// 8. Byte-identical CLI outputs across reruns, worker counts and caching.
Verdict determinism() {
  const auto start = Clock::now();
  const fs::path root = testing::temp_dir("acceptance_determinism");
  const fs::path samples = fs::path(CSSHAP_SOURCE_DIR) / "samples";
  std::vector<std::string> mismatches;
  int compared = 0;

  auto manifest_for = [&](const std::string& method) {
    const bool exact = method.rfind("exact", 0) == 0;
    nlohmann::json j = {
        {"dataset",
         {{"path", (samples / (exact ? "toy16.csv" : "blobs200.csv")).string()},
          {"split", exact ? nlohmann::json{0.5, 0.25, 0.25} : nlohmann::json{0.3, 0.2, 0.5}},
          {"seed", 2}}},
        {"classifier", {{"kind", "lr"}}},
        {"estimator",
         {{"method", method}, {"seed", 5}, {"environments", 20}, {"max_permutations", 300}}},
        {"evaluation", {{"targets", {{{"kind", "knn"}}, {{"kind", "mlp"}}}}}}};
    const fs::path file = root / (method + ".json");
    std::ofstream(file) << j.dump(2);
    return file;
  };

  auto run = [&](const std::string& args, const std::string& env = "") {
    const std::string cmd = env + " " + CSSHAP_CLI + " " + args + " > /dev/null 2>&1";
    return std::system(cmd.c_str()) == 0;
  };

  for (const auto& method : valuation_methods()) {
    const auto manifest = manifest_for(method);
    const std::vector<std::pair<std::string, std::string>> variants = {
        {"w1", "--workers 1"},
        {"rerun", "--workers 1"},
        {"w4", "--workers 4"},
        {"cache", "--workers 4 --cache-dir " + (root / "cache").string()},
        {"warm", "--workers 1 --cache-dir " + (root / "cache").string()}};
    for (const auto& [name, flags] : variants) {
      const fs::path out = root / method / name;
      const std::string common = "--manifest " + manifest.string() + " --out " + out.string() +
                                 " " + flags;
      const std::string values = " --values " + (out / "values.json").string();
      bool ok = run("value " + common) && run("remove-eval " + common + values) &&
                run("noise-eval " + common) &&
                run("transfer-eval " + common + values + " --target lr --target mlp");
      if (!ok) mismatches.push_back(method + "/" + name + " (command failed)");
    }
    for (const auto& entry : fs::directory_iterator(root / method / "w1")) {
      const auto file = entry.path().filename();
      const auto reference = testing::read_file(entry.path());
      for (const char* other : {"rerun", "w4", "cache", "warm"}) {
        ++compared;
        if (testing::read_file(root / method / other / file) != reference) {
          mismatches.push_back(method + "/" + other + "/" + file.string());
        }
      }
    }
  }
  std::string detail = std::to_string(compared) + " file comparisons over " +
                       std::to_string(valuation_methods().size()) +
                       " methods x {rerun, 4 workers, cold cache, warm cache}";
  for (const auto& m : mismatches) detail += "; mismatch " + m;
  return {mismatches.empty() && compared > 0, detail + "; " + fmt(seconds_since(start), 3) + " s"};
}

}  // namespace
}  // namespace csshap

int main(int argc, char** argv) {
  using csshap::Verdict;
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"exact Shapley axioms", csshap::axioms},
      {"estimator convergence", csshap::convergence},
      {"value-function properties", csshap::properties},
      {"WAD identity", csshap::wad_identity},
      {"noise detection", csshap::noise_detection},
      {"high-value removal", csshap::removal},
      {"transferability", csshap::transfer},
      {"determinism and cache transparency", csshap::determinism},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  bool all = true;
  for (std::size_t c = 0; c < criteria.size(); ++c) {
    const int number = static_cast<int>(c) + 1;
    if (!selected.empty() && !selected.contains(number)) continue;
    Verdict v;
    try {
      v = criteria[c].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    all = all && v.pass;
    std::cout << (v.pass ? "PASS" : "FAIL") << " criterion " << number << " ("
              << criteria[c].first << "): " << v.detail << std::endl;
  }
  return all ? 0 : 1;
}
