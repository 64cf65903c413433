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

// csshap: data valuation experiments from a JSON manifest.
//
//   csshap value         --manifest m.json [--seed S] [--workers W] [--cache-dir D] [--out O]
//   csshap remove-eval   --manifest m.json --values values.json [...]
//   csshap noise-eval    --manifest m.json [...]
//   csshap transfer-eval --manifest m.json --values values.json --target lr --target mlp [...]

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "csshap/experiment.hpp"

namespace {

struct CommonFlags {
  std::string manifest;
  std::optional<std::uint64_t> seed;
  int workers = 1;
  std::optional<std::string> cache_dir;
  std::optional<std::string> out;

  void attach(CLI::App* cmd) {
    cmd->add_option("--manifest", manifest, "Experiment manifest (JSON)")->required();
    cmd->add_option("--seed", seed, "Override the estimator seed");
    cmd->add_option("--workers", workers, "Worker threads (outputs do not depend on it)")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--cache-dir", cache_dir,
                    std::string("Persist subset accuracies here (default: $") +
                        csshap::kCacheDirEnv + ")");
    cmd->add_option("--out", out, "Output directory (overrides output_dir)");
  }

  csshap::RunOptions options() const {
    csshap::RunOptions opts;
    opts.seed = seed;
    opts.workers = workers;
    if (cache_dir) opts.cache_dir = *cache_dir;
    if (out) opts.out = *out;
    opts.log = &std::cout;
    return opts;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Class-wise Shapley data valuation"};
  app.require_subcommand(1);

  CommonFlags value_flags, remove_flags, noise_flags, transfer_flags;
  std::string remove_values, transfer_values;
  std::vector<std::string> targets;

  auto* value = app.add_subcommand("value", "Value the training split, write values.json");
  value_flags.attach(value);

  auto* remove = app.add_subcommand("remove-eval", "High-value removal curve and WAD");
  remove_flags.attach(remove);
  remove->add_option("--values", remove_values, "values.json from `value`")->required();

  auto* noise = app.add_subcommand("noise-eval", "Noisy-label detection PR curve and AUC");
  noise_flags.attach(noise);

  auto* transfer = app.add_subcommand("transfer-eval", "Removal curves on target classifiers");
  transfer_flags.attach(transfer);
  transfer->add_option("--values", transfer_values, "values.json from `value`")->required();
  transfer->add_option("--target", targets,
                       "Target classifier kind (lr, knn, mlp, majority_class); repeatable");

  CLI11_PARSE(app, argc, argv);

  try {
    if (value->parsed()) {
      const auto opts = value_flags.options();
      const auto manifest = csshap::load_manifest(value_flags.manifest, opts.seed);
      const auto outcome = csshap::cmd_value(manifest, opts);
      std::cout << "wrote " << outcome.values_file.string() << '\n';
    } else if (remove->parsed()) {
      const auto opts = remove_flags.options();
      const auto manifest = csshap::load_manifest(remove_flags.manifest, opts.seed);
      csshap::cmd_remove_eval(manifest, remove_values, opts);
    } else if (noise->parsed()) {
      const auto opts = noise_flags.options();
      const auto manifest = csshap::load_manifest(noise_flags.manifest, opts.seed);
      csshap::cmd_noise_eval(manifest, opts);
    } else if (transfer->parsed()) {
      const auto opts = transfer_flags.options();
      const auto manifest = csshap::load_manifest(transfer_flags.manifest, opts.seed);
      const auto outcome = csshap::cmd_transfer_eval(manifest, transfer_values, targets, opts);
      for (const auto& file : outcome.files) std::cout << "wrote " << file.string() << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "csshap: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
