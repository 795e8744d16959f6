// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>

#include "sarc/model.hpp"

namespace sarc {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// One bias-corrected Adam update of a single tensor. `step` counts from 1.
void adam_update(std::span<double> param, std::span<const double> grad, std::span<double> m,
                 std::span<double> v, std::size_t step, const AdamConfig& cfg);

class Adam {
 public:
  Adam(const ModelParams& like, bool drop_input_row, AdamConfig cfg);

  void step(ModelParams& params, const ModelParams& grads);
  std::size_t steps() const { return step_; }

 private:
  AdamConfig cfg_;
  ModelParams m_;
  ModelParams v_;
  std::size_t step_ = 0;
};

}  // namespace sarc
