// SPDX-License-Identifier: Apache-2.0
#include "sarc/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

#include "sarc/errors.hpp"

namespace sarc {

std::string_view to_string(EdgeConfig cfg) {
  switch (cfg) {
    case EdgeConfig::bidirectional: return "bi";
    case EdgeConfig::input_to_comet: return "in2c";
    case EdgeConfig::comet_to_input: return "c2in";
  }
  return "bi";
}

std::optional<EdgeConfig> parse_edge_config(std::string_view name) {
  if (name == "bi" || name == "bidirectional") return EdgeConfig::bidirectional;
  if (name == "in2c" || name == "input_to_comet") return EdgeConfig::input_to_comet;
  if (name == "c2in" || name == "comet_to_input") return EdgeConfig::comet_to_input;
  return std::nullopt;
}

std::vector<std::size_t> StarGraph::in_neighbors(std::size_t node) const {
  std::vector<std::size_t> out;
  for (const auto& [src, dst] : edges) {
    if (dst == node) out.push_back(src);
  }
  return out;
}

StarGraph build_star_graph(std::size_t num_comet, EdgeConfig cfg) {
  StarGraph g;
  g.node_count = num_comet + 1;
  for (std::size_t j = 1; j <= num_comet; ++j) {
    if (cfg != EdgeConfig::comet_to_input) g.edges.emplace_back(0, j);
    if (cfg != EdgeConfig::input_to_comet) g.edges.emplace_back(j, 0);
  }
  return g;
}

ModelParams ModelParams::zeros(const ModelDims& dims, bool drop_input_row) {
  if (dims.layers == 0) throw UsageError("a GraphSage stack needs at least one layer");
  ModelParams p;
  p.dims = dims;
  for (std::size_t k = 0; k < dims.layers; ++k) {
    const std::size_t in = k == 0 ? dims.input_dim : dims.hidden_dim;
    p.sage.push_back({Mat(dims.hidden_dim, in), Mat(dims.hidden_dim, in), std::vector<double>(dims.hidden_dim)});
  }
  p.head_w = Mat(kNumClasses, dims.head_inputs(drop_input_row));
  p.head_b.assign(kNumClasses, 0.0);
  p.base_w = Mat(kNumClasses, dims.input_dim);
  p.base_b.assign(kNumClasses, 0.0);
  return p;
}

ModelParams ModelParams::glorot(const ModelDims& dims, bool drop_input_row, Rng& rng) {
  ModelParams p = zeros(dims, drop_input_row);
  const auto fill = [&rng](Mat& w) {
    if (w.empty()) return;
    const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    for (double& v : w.values()) v = rng.uniform(-limit, limit);
  };
  for (auto& layer : p.sage) {
    fill(layer.w_self);
    fill(layer.w_neigh);
  }
  fill(p.head_w);
  fill(p.base_w);
  return p;
}

std::vector<std::span<double>> ModelParams::tensors() {
  std::vector<std::span<double>> out;
  for (auto& layer : sage) {
    out.push_back(layer.w_self.values());
    out.push_back(layer.w_neigh.values());
    out.push_back(layer.bias);
  }
  out.push_back(head_w.values());
  out.push_back(head_b);
  out.push_back(base_w.values());
  out.push_back(base_b);
  return out;
}

std::vector<std::span<const double>> ModelParams::tensors() const {
  std::vector<std::span<const double>> out;
  for (auto span : const_cast<ModelParams*>(this)->tensors()) out.emplace_back(span.data(), span.size());
  return out;
}

void check_shapes(const ModelParams& p, bool drop_input_row) {
  const auto& d = p.dims;
  const auto fail = [](const std::string& what) { throw DataError("model parameter shape mismatch: " + what); };
  if (p.sage.size() != d.layers) fail("expected " + std::to_string(d.layers) + " GraphSage layers");
  for (std::size_t k = 0; k < p.sage.size(); ++k) {
    const std::size_t in = k == 0 ? d.input_dim : d.hidden_dim;
    const auto& l = p.sage[k];
    if (l.w_self.rows() != d.hidden_dim || l.w_self.cols() != in || l.w_neigh.rows() != d.hidden_dim ||
        l.w_neigh.cols() != in || l.bias.size() != d.hidden_dim) {
      fail("GraphSage layer " + std::to_string(k));
    }
  }
  if (p.head_w.rows() != kNumClasses || p.head_w.cols() != d.head_inputs(drop_input_row) ||
      p.head_b.size() != kNumClasses) {
    fail("classifier head expects " + std::to_string(d.head_inputs(drop_input_row)) + " inputs, has " +
         std::to_string(p.head_w.cols()));
  }
  if (p.base_w.rows() != kNumClasses || p.base_w.cols() != d.input_dim || p.base_b.size() != kNumClasses) {
    fail("baseline head");
  }
}

std::array<double, kNumClasses> softmax(const std::array<double, kNumClasses>& logits) {
  const double m = std::max(logits[0], logits[1]);
  const double e0 = std::exp(logits[0] - m);
  const double e1 = std::exp(logits[1] - m);
  const double z = e0 + e1;
  return {e0 / z, e1 / z};
}

double cross_entropy(const std::array<double, kNumClasses>& logits, int label) {
  const double m = std::max(logits[0], logits[1]);
  const double lse = m + std::log(std::exp(logits[0] - m) + std::exp(logits[1] - m));
  return lse - logits[static_cast<std::size_t>(label)];
}

std::uint64_t fingerprint(const ModelParams& p, bool baseline) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto mix = [&h](std::uint64_t v) {
    h ^= v;
    h *= 0x100000001b3ULL;
  };
  mix(p.dims.input_dim);
  mix(p.dims.hidden_dim);
  mix(p.dims.num_comet);
  mix(p.dims.layers);
  const auto tensors = p.tensors();
  // Baseline outputs depend only on the last two tensors.
  const std::size_t first = baseline ? tensors.size() - 2 : 0;
  const std::size_t last = baseline ? tensors.size() : tensors.size() - 2;
  for (std::size_t t = first; t < last; ++t) {
    mix(tensors[t].size());
    for (double v : tensors[t]) mix(std::bit_cast<std::uint64_t>(v));
  }
  return h;
}

namespace {

void check_label(int label) {
  if (label != 0 && label != 1) throw UsageError("label must be 0 or 1, got " + std::to_string(label));
}

// out += W * v
void gemv_add(const Mat& w, std::span<const double> v, std::span<double> out) {
  for (std::size_t r = 0; r < w.rows(); ++r) {
    const auto wr = w.row(r);
    double acc = 0.0;
    for (std::size_t c = 0; c < wr.size(); ++c) acc += wr[c] * v[c];
    out[r] += acc;
  }
}

// out += W^T * g
void gemv_t_add(const Mat& w, std::span<const double> g, std::span<double> out) {
  for (std::size_t r = 0; r < w.rows(); ++r) {
    const double gr = g[r];
    if (gr == 0.0) continue;
    const auto wr = w.row(r);
    for (std::size_t c = 0; c < wr.size(); ++c) out[c] += wr[c] * gr;
  }
}

// G += g v^T
void outer_add(Mat& grad, std::span<const double> g, std::span<const double> v) {
  for (std::size_t r = 0; r < grad.rows(); ++r) {
    const double gr = g[r];
    if (gr == 0.0) continue;
    auto row = grad.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += gr * v[c];
  }
}

struct SageTrace {
  std::vector<Mat> hidden;
  std::vector<Mat> aggregated;
  std::vector<Mat> preactivation;
  std::vector<Mat> activation;
};

SageTrace run_sage(const ModelParams& p, const StarGraph& g, const Mat& x, bool l2_normalize) {
  const auto& d = p.dims;
  if (x.rows() != g.node_count || x.cols() != d.input_dim) {
    throw DataError("input embeddings are " + std::to_string(x.rows()) + "x" + std::to_string(x.cols()) +
                    ", model expects " + std::to_string(g.node_count) + "x" + std::to_string(d.input_dim));
  }
  if (g.node_count != d.num_comet + 1) {
    throw DataError("graph has " + std::to_string(g.node_count) + " nodes, model expects " +
                    std::to_string(d.num_comet + 1));
  }
  if (p.sage.size() != d.layers) throw DataError("model parameter shape mismatch: GraphSage layer count");

  std::vector<std::vector<std::size_t>> neighbors(g.node_count);
  for (std::size_t v = 0; v < g.node_count; ++v) neighbors[v] = g.in_neighbors(v);

  SageTrace t;
  t.hidden.push_back(x);
  for (std::size_t k = 0; k < p.sage.size(); ++k) {
    const auto& layer = p.sage[k];
    const Mat& h = t.hidden.back();
    if (layer.w_self.cols() != h.cols() || layer.w_neigh.cols() != h.cols()) {
      throw DataError("model parameter shape mismatch: GraphSage layer " + std::to_string(k));
    }
    const std::size_t out_dim = layer.w_self.rows();
    Mat agg(g.node_count, h.cols());
    Mat pre(g.node_count, out_dim);
    Mat act(g.node_count, out_dim);
    Mat next(g.node_count, out_dim);
    for (std::size_t v = 0; v < g.node_count; ++v) {
      const auto& nb = neighbors[v];
      auto a = agg.row(v);
      if (!nb.empty()) {
        for (std::size_t u : nb) {
          const auto hu = h.row(u);
          for (std::size_t c = 0; c < a.size(); ++c) a[c] += hu[c];
        }
        const double inv = 1.0 / static_cast<double>(nb.size());
        for (double& c : a) c *= inv;
      }
      auto z = pre.row(v);
      std::copy(layer.bias.begin(), layer.bias.end(), z.begin());
      gemv_add(layer.w_self, h.row(v), z);
      gemv_add(layer.w_neigh, a, z);
      auto r = act.row(v);
      for (std::size_t c = 0; c < z.size(); ++c) r[c] = z[c] > 0.0 ? z[c] : 0.0;
      auto o = next.row(v);
      if (l2_normalize) {
        double sq = 0.0;
        for (double c : r) sq += c * c;
        if (sq > 0.0) {
          const double inv = 1.0 / std::sqrt(sq);
          for (std::size_t c = 0; c < r.size(); ++c) o[c] = r[c] * inv;
        }
      } else {
        std::copy(r.begin(), r.end(), o.begin());
      }
    }
    t.aggregated.push_back(std::move(agg));
    t.preactivation.push_back(std::move(pre));
    t.activation.push_back(std::move(act));
    t.hidden.push_back(std::move(next));
  }
  return t;
}

void finish_head(ModelOutput& out, const Mat& w, std::span<const double> b, std::span<const double> input) {
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const auto wr = w.row(c);
    double acc = b[c];
    for (std::size_t i = 0; i < wr.size(); ++i) acc += wr[i] * input[i];
    out.logits[c] = acc;
  }
  out.probabilities = softmax(out.logits);
}

void check_cache(const ModelParams& p, const ModelOutput& out, bool baseline) {
  const auto& c = out.cache;
  if (!c.valid) throw UsageError("backward called without a forward cache");
  if (c.baseline != baseline) throw UsageError("forward cache was produced by the other model head");
  if (c.dims != p.dims || c.params_fingerprint != fingerprint(p, baseline)) {
    throw UsageError("stale forward cache: parameters changed since the forward pass");
  }
}

}  // namespace

Mat sage_forward(const ModelParams& p, const StarGraph& g, const Mat& x, bool l2_normalize) {
  return std::move(run_sage(p, g, x, l2_normalize).hidden.back());
}

ModelOutput model_forward(const ModelParams& p, const Mat& x, const ForwardConfig& fc) {
  if (fc.drop_input_row && p.dims.num_comet == 0) {
    throw UsageError("drop_input_row needs at least one commonsense row (M >= 1)");
  }
  check_shapes(p, fc.drop_input_row);
  const StarGraph g = build_star_graph(p.dims.num_comet, fc.edges);
  SageTrace t = run_sage(p, g, x, fc.l2_normalize);

  ModelOutput out;
  out.node_embeddings = t.hidden.back();
  const auto flat = out.node_embeddings.values();
  const std::size_t skip = fc.drop_input_row ? out.node_embeddings.cols() : 0;
  std::vector<double> head_input(flat.begin() + static_cast<std::ptrdiff_t>(skip), flat.end());
  finish_head(out, p.head_w, p.head_b, head_input);

  auto& c = out.cache;
  c.valid = true;
  c.baseline = false;
  c.config = fc;
  c.dims = p.dims;
  c.params_fingerprint = fingerprint(p, false);
  c.input = x;
  c.hidden = std::move(t.hidden);
  c.aggregated = std::move(t.aggregated);
  c.preactivation = std::move(t.preactivation);
  c.activation = std::move(t.activation);
  c.head_input = std::move(head_input);
  return out;
}

ModelOutput baseline_forward(const ModelParams& p, std::span<const double> x0) {
  if (x0.size() != p.dims.input_dim || p.base_w.cols() != p.dims.input_dim) {
    throw DataError("sentence embedding has " + std::to_string(x0.size()) + " features, baseline expects " +
                    std::to_string(p.dims.input_dim));
  }
  if (p.base_w.rows() != kNumClasses || p.base_b.size() != kNumClasses) {
    throw DataError("model parameter shape mismatch: baseline head");
  }
  ModelOutput out;
  finish_head(out, p.base_w, p.base_b, x0);
  auto& c = out.cache;
  c.valid = true;
  c.baseline = true;
  c.dims = p.dims;
  c.params_fingerprint = fingerprint(p, true);
  c.input = Mat(1, x0.size(), std::vector<double>(x0.begin(), x0.end()));
  return out;
}

Gradients backward(const ModelParams& p, const ModelOutput& out, int label, const ForwardConfig& fc) {
  check_label(label);
  check_cache(p, out, false);
  const auto& c = out.cache;
  if (!(c.config == fc)) throw UsageError("stale forward cache: forward config differs");

  Gradients grads;
  grads.params = ModelParams::zeros(p.dims, fc.drop_input_row);
  grads.loss = cross_entropy(out.logits, label);

  std::array<double, kNumClasses> dlogits = out.probabilities;
  dlogits[static_cast<std::size_t>(label)] -= 1.0;
  outer_add(grads.params.head_w, dlogits, c.head_input);
  for (std::size_t k = 0; k < kNumClasses; ++k) grads.params.head_b[k] = dlogits[k];

  const std::size_t nodes = c.hidden.back().rows();
  const std::size_t width = c.hidden.back().cols();
  Mat dh(nodes, width);
  {
    std::vector<double> dflat(c.head_input.size(), 0.0);
    gemv_t_add(p.head_w, dlogits, dflat);
    const std::size_t skip = fc.drop_input_row ? width : 0;
    std::copy(dflat.begin(), dflat.end(), dh.values().begin() + static_cast<std::ptrdiff_t>(skip));
  }

  const StarGraph g = build_star_graph(p.dims.num_comet, fc.edges);
  std::vector<std::vector<std::size_t>> neighbors(g.node_count);
  for (std::size_t v = 0; v < g.node_count; ++v) neighbors[v] = g.in_neighbors(v);

  for (std::size_t k = p.sage.size(); k-- > 0;) {
    const auto& layer = p.sage[k];
    auto& glayer = grads.params.sage[k];
    const Mat& h_in = c.hidden[k];
    const Mat& act = c.activation[k];
    const Mat& pre = c.preactivation[k];
    Mat dprev(h_in.rows(), h_in.cols());
    std::vector<double> dpre(layer.w_self.rows());
    std::vector<double> dagg(h_in.cols());
    for (std::size_t v = 0; v < nodes; ++v) {
      const auto dout = dh.row(v);
      if (fc.l2_normalize) {
        const auto a = act.row(v);
        double sq = 0.0;
        for (double x : a) sq += x * x;
        if (sq > 0.0) {
          const double norm = std::sqrt(sq);
          double dot = 0.0;
          for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * dout[i];
          const double proj = dot / sq;
          for (std::size_t i = 0; i < a.size(); ++i) dpre[i] = (dout[i] - a[i] * proj) / norm;
        } else {
          std::fill(dpre.begin(), dpre.end(), 0.0);
        }
      } else {
        std::copy(dout.begin(), dout.end(), dpre.begin());
      }
      const auto z = pre.row(v);
      for (std::size_t i = 0; i < dpre.size(); ++i) {
        if (!(z[i] > 0.0)) dpre[i] = 0.0;
      }
      outer_add(glayer.w_self, dpre, h_in.row(v));
      outer_add(glayer.w_neigh, dpre, c.aggregated[k].row(v));
      for (std::size_t i = 0; i < dpre.size(); ++i) glayer.bias[i] += dpre[i];
      gemv_t_add(layer.w_self, dpre, dprev.row(v));

      const auto& nb = neighbors[v];
      if (nb.empty()) continue;
      std::fill(dagg.begin(), dagg.end(), 0.0);
      gemv_t_add(layer.w_neigh, dpre, dagg);
      const double inv = 1.0 / static_cast<double>(nb.size());
      for (std::size_t u : nb) {
        auto du = dprev.row(u);
        for (std::size_t i = 0; i < du.size(); ++i) du[i] += dagg[i] * inv;
      }
    }
    dh = std::move(dprev);
  }
  grads.input = std::move(dh);
  return grads;
}

Gradients baseline_backward(const ModelParams& p, const ModelOutput& out, int label) {
  check_label(label);
  check_cache(p, out, true);
  const auto& c = out.cache;
  Gradients grads;
  grads.params = ModelParams::zeros(p.dims, false);
  // Only the baseline head is trained on this path; the head width of a
  // drop-input-row model may differ, so match its shape.
  grads.params.head_w = Mat(p.head_w.rows(), p.head_w.cols());
  grads.loss = cross_entropy(out.logits, label);
  std::array<double, kNumClasses> dlogits = out.probabilities;
  dlogits[static_cast<std::size_t>(label)] -= 1.0;
  outer_add(grads.params.base_w, dlogits, c.input.row(0));
  for (std::size_t k = 0; k < kNumClasses; ++k) grads.params.base_b[k] = dlogits[k];
  grads.input = Mat(1, c.input.cols());
  gemv_t_add(p.base_w, dlogits, grads.input.row(0));
  return grads;
}

}  // namespace sarc
