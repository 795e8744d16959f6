// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "sarc/matrix.hpp"
#include "sarc/random.hpp"

namespace sarc {

enum class EdgeConfig { bidirectional, input_to_comet, comet_to_input };

// Short CLI names: bi, in2c, c2in.
std::string_view to_string(EdgeConfig cfg);
std::optional<EdgeConfig> parse_edge_config(std::string_view name);

// Directed star over M+1 nodes; node 0 is the input sentence.
struct StarGraph {
  std::size_t node_count = 1;
  std::vector<std::pair<std::size_t, std::size_t>> edges;  // (source, target)

  // Sources of edges ending at `node`, in edge order.
  std::vector<std::size_t> in_neighbors(std::size_t node) const;
};

StarGraph build_star_graph(std::size_t num_comet, EdgeConfig cfg);

struct ForwardConfig {
  EdgeConfig edges = EdgeConfig::bidirectional;
  // Drop V row 0 before the head; the head then reads M*N features.
  bool drop_input_row = false;
  // L2-normalize every GraphSage layer output row. Off in the reference setup.
  bool l2_normalize = false;

  bool operator==(const ForwardConfig&) const = default;
};

struct ModelDims {
  std::size_t input_dim = 0;   // D
  std::size_t hidden_dim = 0;  // N
  std::size_t num_comet = 0;   // M
  std::size_t layers = 1;

  std::size_t head_inputs(bool drop_input_row) const {
    return (drop_input_row ? num_comet : num_comet + 1) * hidden_dim;
  }
  bool operator==(const ModelDims&) const = default;
};

struct SageLayer {
  Mat w_self;   // out x in
  Mat w_neigh;  // out x in
  std::vector<double> bias;

  bool operator==(const SageLayer&) const = default;
};

inline constexpr std::size_t kNumClasses = 2;

// GraphSage stack, classifier head over flattened V, and the baseline head
// over the sentence row. Gradients use the same type.
struct ModelParams {
  ModelDims dims;
  std::vector<SageLayer> sage;
  Mat head_w;  // 2 x head_inputs
  std::vector<double> head_b;
  Mat base_w;  // 2 x D
  std::vector<double> base_b;

  // Zero-filled tensors with the shapes implied by (dims, drop_input_row).
  static ModelParams zeros(const ModelDims& dims, bool drop_input_row);
  // Glorot-uniform weights, zero biases.
  static ModelParams glorot(const ModelDims& dims, bool drop_input_row, Rng& rng);

  // Fixed tensor order shared by the optimizer and the checkpoint format:
  // per layer (w_self, w_neigh, bias), then head_w, head_b, base_w, base_b.
  std::vector<std::span<double>> tensors();
  std::vector<std::span<const double>> tensors() const;

  bool operator==(const ModelParams&) const = default;
};

// Throws DataError when tensor shapes disagree with dims or with the head
// width implied by drop_input_row.
void check_shapes(const ModelParams& p, bool drop_input_row);

// Intermediate activations of one forward pass.
struct ForwardCache {
  bool valid = false;
  bool baseline = false;
  ForwardConfig config;
  ModelDims dims;
  std::uint64_t params_fingerprint = 0;
  Mat input;                      // X, or the single sentence row for the baseline
  std::vector<Mat> hidden;        // H_0 = X .. H_K = V
  std::vector<Mat> aggregated;    // per layer: mean of in-neighbour rows of H_{k-1}
  std::vector<Mat> preactivation;
  std::vector<Mat> activation;    // ReLU output, before optional normalization
  std::vector<double> head_input;
};

struct ModelOutput {
  std::array<double, kNumClasses> logits{};
  std::array<double, kNumClasses> probabilities{};
  Mat node_embeddings;  // V, empty for the baseline
  ForwardCache cache;

  // Ties resolve to class 0.
  int predicted() const { return logits[1] > logits[0] ? 1 : 0; }
};

std::array<double, kNumClasses> softmax(const std::array<double, kNumClasses>& logits);
double cross_entropy(const std::array<double, kNumClasses>& logits, int label);

std::uint64_t fingerprint(const ModelParams& p, bool baseline);

// GraphSage stack: for each node, mean of in-neighbour rows (zero when there
// are none), W_self*h + W_neigh*mean + b, ReLU.
Mat sage_forward(const ModelParams& p, const StarGraph& g, const Mat& x, bool l2_normalize = false);

ModelOutput model_forward(const ModelParams& p, const Mat& x, const ForwardConfig& fc);
ModelOutput baseline_forward(const ModelParams& p, std::span<const double> x0);

struct Gradients {
  ModelParams params;
  Mat input;  // dL/dX; one row for the baseline
  double loss = 0.0;
};

// Exact cross-entropy gradients for an output of model_forward. Throws
// UsageError if the cache is missing or was produced by different params or
// config.
Gradients backward(const ModelParams& p, const ModelOutput& out, int label, const ForwardConfig& fc);
Gradients baseline_backward(const ModelParams& p, const ModelOutput& out, int label);

}  // namespace sarc
