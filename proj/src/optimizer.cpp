// SPDX-License-Identifier: Apache-2.0
#include "sarc/optimizer.hpp"

#include <cmath>

#include "sarc/errors.hpp"

namespace sarc {

void adam_update(std::span<double> param, std::span<const double> grad, std::span<double> m,
                 std::span<double> v, std::size_t step, const AdamConfig& cfg) {
  const double t = static_cast<double>(step);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < param.size(); ++i) {
    m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grad[i];
    v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
    const double m_hat = m[i] / c1;
    const double v_hat = v[i] / c2;
    param[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
  }
}

Adam::Adam(const ModelParams& like, bool drop_input_row, AdamConfig cfg)
    : cfg_(cfg), m_(ModelParams::zeros(like.dims, drop_input_row)), v_(m_) {}

void Adam::step(ModelParams& params, const ModelParams& grads) {
  auto p = params.tensors();
  auto g = grads.tensors();
  auto m = m_.tensors();
  auto v = v_.tensors();
  if (p.size() != g.size() || p.size() != m.size()) throw UsageError("Adam: parameter layout changed");
  ++step_;
  for (std::size_t t = 0; t < p.size(); ++t) {
    if (p[t].size() != g[t].size() || p[t].size() != m[t].size()) {
      throw UsageError("Adam: tensor " + std::to_string(t) + " changed shape");
    }
    adam_update(p[t], g[t], m[t], v[t], step_, cfg_);
  }
}

}  // namespace sarc
