// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "sarc/analysis.hpp"
#include "sarc/dataset.hpp"
#include "sarc/trainer.hpp"

namespace sarc {

struct AblationConfig {
  const char* table;
  ModelKind kind;
};

// Baseline plus the three edge configurations, then the three edge
// configurations with the input row removed before the head.
std::vector<AblationConfig> ablation_configs(bool l2_normalize = false);

// Every configuration shares the same per-run splits. Configurations run on up
// to `jobs` threads; rows come back in ablation_configs() order.
std::vector<AblationRow> run_ablation(const Dataset& d, const SplitSpec& split, const Hyperparams& hp,
                                      std::size_t runs, std::size_t jobs = 1, bool l2_normalize = false);

struct ToyConfig {
  std::size_t instances = 1000;
  std::size_t dim = 8;
  std::size_t num_comet = 2;
  std::uint64_t seed = 7;
  // Shift of each commonsense row along the label direction; 0 makes them pure noise.
  double comet_signal = 0.0;
  // Minimum |projection| of row 0, keeping classes separable with a margin.
  double margin = 0.1;
};

// Synthetic separable dataset: row 0 is Gaussian and the label is the sign of
// its projection on a fixed unit vector. Sarcastic instances get a fine label.
Dataset make_toy_dataset(const ToyConfig& cfg);

}  // namespace sarc
