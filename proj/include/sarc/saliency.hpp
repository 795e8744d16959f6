// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "sarc/dataset.hpp"
#include "sarc/matrix.hpp"
#include "sarc/trainer.hpp"

namespace sarc {

struct SaliencyMap {
  Mat raw;     // signed gradient x input, (M+1) x D
  Mat pooled;  // (M+1) x (D / block), values in [0, 1]
  std::size_t block = 8;
  bool per_row = false;
  // One entry for global normalization, one per row otherwise.
  std::vector<double> norm_min;
  std::vector<double> norm_max;
};

enum class Segment { input_sentence, comet_sequences };

std::string_view to_string(Segment s);
std::optional<Segment> parse_segment(std::string_view name);  // "input" | "comet"

struct OcclusionSpec {
  Segment segment = Segment::input_sentence;

  // Rows zeroed for a model with `num_comet` commonsense rows.
  std::vector<std::size_t> rows(std::size_t num_comet) const;
};

// Which class probability the occlusion metric tracks.
enum class OcclusionClass { predicted, gold };

// dL(y, f(X))/dX[s][j] * X[s][j] with y the instance's gold label. GCN models only.
Mat gradient_saliency(const TrainedModel& m, const Instance& inst);

// |raw| -> mean over adjacent blocks of `block` columns -> min-max to [0, 1],
// over the whole map or per row. A constant map normalizes to zeros.
SaliencyMap pool_and_normalize(const Mat& raw, std::size_t block = 8, bool per_row = false);

// Elementwise mean of |raw| over several maps of equal shape.
Mat mean_abs_map(const std::vector<Mat>& raws);

double occlusion_delta(const TrainedModel& m, const Instance& inst, const OcclusionSpec& spec,
                       OcclusionClass cls = OcclusionClass::predicted);

using DeltaFn = std::function<double(const Instance&)>;

// Mean of per-instance deltas, summed in dataset order.
double occlusion_metric(const Dataset& d, const DeltaFn& delta);
double occlusion_metric(const TrainedModel& m, const Dataset& d, const OcclusionSpec& spec,
                        OcclusionClass cls = OcclusionClass::predicted);

// Binary greyscale PGM (P5), one row of cells per map row, 0 = black = lowest.
// Each cell is drawn as a scale x scale square.
std::string to_pgm(const Mat& pooled, std::size_t scale = 1);

}  // namespace sarc
