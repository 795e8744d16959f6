// SPDX-License-Identifier: Apache-2.0
// Straight-line reference implementations used as test oracles. Nothing here
// calls into the library's graph, forward or backward code.
#pragma once

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "sarc/analysis.hpp"
#include "sarc/model.hpp"
#include "sarc/random.hpp"
#include "sarc/trainer.hpp"

namespace oracle {

using sarc::EdgeConfig;
using sarc::Mat;
using sarc::ModelParams;

inline bool is_edge(EdgeConfig cfg, std::size_t src, std::size_t dst) {
  const bool spoke_to_hub = src != 0 && dst == 0;
  const bool hub_to_spoke = src == 0 && dst != 0;
  switch (cfg) {
    case EdgeConfig::bidirectional:
      return spoke_to_hub || hub_to_spoke;
    case EdgeConfig::input_to_comet:
      return hub_to_spoke;
    case EdgeConfig::comet_to_input:
      return spoke_to_hub;
  }
  return false;
}

// One GraphSage layer, written out with explicit index loops.
inline Mat sage_layer(const sarc::SageLayer& w, EdgeConfig cfg, const Mat& h, bool l2) {
  const std::size_t nodes = h.rows();
  const std::size_t in = h.cols();
  const std::size_t out = w.bias.size();
  Mat v(nodes, out);
  for (std::size_t node = 0; node < nodes; ++node) {
    std::vector<double> mean(in, 0.0);
    std::size_t count = 0;
    for (std::size_t src = 0; src < nodes; ++src) {
      if (!is_edge(cfg, src, node)) continue;
      ++count;
      for (std::size_t c = 0; c < in; ++c) mean[c] += h(src, c);
    }
    if (count > 0) {
      for (std::size_t c = 0; c < in; ++c) mean[c] /= static_cast<double>(count);
    }
    double norm2 = 0.0;
    for (std::size_t o = 0; o < out; ++o) {
      double acc = w.bias[o];
      for (std::size_t c = 0; c < in; ++c) acc += w.w_self(o, c) * h(node, c);
      for (std::size_t c = 0; c < in; ++c) acc += w.w_neigh(o, c) * mean[c];
      v(node, o) = acc > 0.0 ? acc : 0.0;
      norm2 += v(node, o) * v(node, o);
    }
    if (l2 && norm2 > 0.0) {
      const double n = std::sqrt(norm2);
      for (std::size_t o = 0; o < out; ++o) v(node, o) /= n;
    }
  }
  return v;
}

inline Mat sage(const ModelParams& p, EdgeConfig cfg, const Mat& x, bool l2) {
  Mat h = x;
  for (const auto& layer : p.sage) h = sage_layer(layer, cfg, h, l2);
  return h;
}

inline std::array<double, 2> logits(const ModelParams& p, const Mat& x, const sarc::ForwardConfig& fc) {
  const Mat v = sage(p, fc.edges, x, fc.l2_normalize);
  std::vector<double> z;
  for (std::size_t r = fc.drop_input_row ? 1 : 0; r < v.rows(); ++r) {
    for (std::size_t c = 0; c < v.cols(); ++c) z.push_back(v(r, c));
  }
  std::array<double, 2> out{};
  for (std::size_t k = 0; k < 2; ++k) {
    double acc = p.head_b[k];
    for (std::size_t i = 0; i < z.size(); ++i) acc += p.head_w(k, i) * z[i];
    out[k] = acc;
  }
  return out;
}

inline std::array<double, 2> baseline_logits(const ModelParams& p, const std::vector<double>& x0) {
  std::array<double, 2> out{};
  for (std::size_t k = 0; k < 2; ++k) {
    double acc = p.base_b[k];
    for (std::size_t c = 0; c < x0.size(); ++c) acc += p.base_w(k, c) * x0[c];
    out[k] = acc;
  }
  return out;
}

inline std::array<double, 2> probabilities(const std::array<double, 2>& z) {
  const double e0 = std::exp(z[0]);
  const double e1 = std::exp(z[1]);
  return {e0 / (e0 + e1), e1 / (e0 + e1)};
}

// -log softmax(z)[label], written independently of sarc::cross_entropy.
inline double loss(const std::array<double, 2>& z, int label) {
  const double other = z[1 - label];
  const double mine = z[label];
  return std::log1p(std::exp(other - mine));
}

// Random parameters with non-zero biases so every tensor carries gradient.
inline ModelParams random_params(const sarc::ModelDims& dims, bool drop, sarc::Rng& rng) {
  ModelParams p = ModelParams::glorot(dims, drop, rng);
  for (auto t : p.tensors()) {
    for (double& v : t) v = rng.uniform(-0.8, 0.8);
  }
  return p;
}

inline Mat random_matrix(std::size_t rows, std::size_t cols, sarc::Rng& rng) {
  Mat m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = rng.normal();
  }
  return m;
}

inline bool same_bits(double a, double b) { return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b); }

inline bool same_bits(const Mat& a, const Mat& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  for (std::size_t i = 0; i < a.values().size(); ++i) {
    if (!same_bits(a.values()[i], b.values()[i])) return false;
  }
  return true;
}

// Relative error with a floor on the denominator so that exactly-zero
// gradients compare on an absolute scale.
inline constexpr double kRelFloor = 1e-7;

inline double rel_error(double analytic, double numeric) {
  const double denom = std::max({std::fabs(analytic), std::fabs(numeric), kRelFloor});
  return std::fabs(analytic - numeric) / denom;
}

// Central difference of f at v[i] with step h, restoring v[i] afterwards.
inline double central_difference(double& slot, double h, const std::function<double()>& f) {
  const double saved = slot;
  slot = saved + h;
  const double up = f();
  slot = saved - h;
  const double down = f();
  slot = saved;
  return (up - down) / (2.0 * h);
}

struct GradCheck {
  double worst = 0.0;
  std::size_t checked = 0;
};

// Compares every parameter and input gradient of the gcn loss with central
// differences of the oracle loss.
inline GradCheck check_gradients(ModelParams p, Mat x, int label, const sarc::ForwardConfig& fc, double h) {
  const sarc::ModelOutput out = sarc::model_forward(p, x, fc);
  const sarc::Gradients g = sarc::backward(p, out, label, fc);
  const auto f = [&] { return loss(logits(p, x, fc), label); };
  GradCheck result;
  auto params = p.tensors();
  const auto grads = g.params.tensors();
  for (std::size_t t = 0; t < params.size(); ++t) {
    for (std::size_t i = 0; i < params[t].size(); ++i) {
      const double numeric = central_difference(params[t][i], h, f);
      result.worst = std::max(result.worst, rel_error(grads[t][i], numeric));
      ++result.checked;
    }
  }
  for (std::size_t i = 0; i < x.values().size(); ++i) {
    const double numeric = central_difference(x.values()[i], h, f);
    result.worst = std::max(result.worst, rel_error(g.input.values()[i], numeric));
    ++result.checked;
  }
  return result;
}

inline sarc::TrainedModel gcn_model(const ModelParams& p, const sarc::ForwardConfig& fc) {
  sarc::TrainedModel m;
  m.params = p;
  m.kind = sarc::ModelKind::gcn(fc);
  return m;
}

// Brute-force metric definitions over (gold, baseline, gcn) triples.
struct Triple {
  int gold;
  int baseline;
  int gcn;
};

inline sarc::PredictionTable table_of(const std::vector<Triple>& rows) {
  sarc::PredictionTable t;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    t.records.push_back({"r" + std::to_string(i), rows[i].gold, rows[i].baseline, rows[i].gcn});
  }
  return t;
}

struct MetricCheck {
  std::size_t tables = 0;
  std::size_t mismatches = 0;
};

// Compares prediction_overlap, gcn_only_wrong_set and ns_coverage with direct
// counting on one table.
inline bool metrics_agree(const std::vector<Triple>& rows) {
  const sarc::PredictionTable t = table_of(rows);
  std::size_t disagree = 0;
  std::vector<std::string> wrong;
  std::size_t ns = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].baseline != rows[i].gcn) ++disagree;
    const bool gcn_wrong = rows[i].gcn != rows[i].gold;
    const bool base_right = rows[i].baseline == rows[i].gold;
    if (gcn_wrong && base_right) {
      wrong.push_back("r" + std::to_string(i));
      if (rows[i].gold == 0) ++ns;
    }
  }
  const auto cov = sarc::ns_coverage(t);
  if (sarc::gcn_only_wrong_set(t) != wrong || cov.ids != wrong || cov.nonsarcastic != ns) return false;
  if (wrong.empty() ? cov.coverage.has_value()
                    : (!cov.coverage || *cov.coverage != static_cast<double>(ns) / static_cast<double>(wrong.size()))) {
    return false;
  }
  if (rows.empty()) return true;
  const double n = static_cast<double>(rows.size());
  const double overlap = sarc::prediction_overlap(t);
  if (overlap != static_cast<double>(rows.size() - disagree) / n) return false;
  return overlap + static_cast<double>(disagree) / n == 1.0;
}

// Every table of n records with all 8 (gold, baseline, gcn) combinations per
// record, for n = 0..max_n. This covers every gold/prediction table.
inline MetricCheck exhaustive_metric_check(std::size_t max_n) {
  MetricCheck r;
  for (std::size_t n = 0; n <= max_n; ++n) {
    std::size_t total = 1;
    for (std::size_t i = 0; i < n; ++i) total *= 8;
    std::vector<Triple> rows(n);
    for (std::size_t code = 0; code < total; ++code) {
      std::size_t c = code;
      for (std::size_t i = 0; i < n; ++i, c /= 8) {
        rows[i] = {static_cast<int>(c & 1), static_cast<int>((c >> 1) & 1), static_cast<int>((c >> 2) & 1)};
      }
      ++r.tables;
      if (!metrics_agree(rows)) ++r.mismatches;
    }
  }
  return r;
}

inline MetricCheck random_metric_check(std::size_t tables, std::size_t max_n, std::uint64_t seed) {
  sarc::Rng rng(seed);
  MetricCheck r;
  for (std::size_t k = 0; k < tables; ++k) {
    std::vector<Triple> rows(1 + rng.below(max_n));
    for (auto& row : rows) {
      row = {static_cast<int>(rng.below(2)), static_cast<int>(rng.below(2)), static_cast<int>(rng.below(2))};
    }
    ++r.tables;
    if (!metrics_agree(rows)) ++r.mismatches;
  }
  return r;
}

}  // namespace oracle
