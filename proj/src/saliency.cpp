// SPDX-License-Identifier: Apache-2.0
#include "sarc/saliency.hpp"

#include <algorithm>
#include <cmath>

#include "sarc/errors.hpp"

namespace sarc {

std::string_view to_string(Segment s) {
  return s == Segment::input_sentence ? "input" : "comet";
}

std::optional<Segment> parse_segment(std::string_view name) {
  if (name == "input" || name == "input_sentence") return Segment::input_sentence;
  if (name == "comet" || name == "comet_sequences") return Segment::comet_sequences;
  return std::nullopt;
}

std::vector<std::size_t> OcclusionSpec::rows(std::size_t num_comet) const {
  if (segment == Segment::input_sentence) return {0};
  if (num_comet == 0) throw UsageError("cannot occlude commonsense rows of a model without any");
  std::vector<std::size_t> out;
  for (std::size_t r = 1; r <= num_comet; ++r) out.push_back(r);
  return out;
}

namespace {

void require_gcn(const TrainedModel& m, std::string_view what) {
  if (m.kind.type != ModelType::gcn) {
    throw UsageError(std::string(what) + " needs a gcn model; the baseline has no commonsense rows");
  }
}

}  // namespace

Mat gradient_saliency(const TrainedModel& m, const Instance& inst) {
  require_gcn(m, "gradient saliency");
  const Mat x = instance_matrix(inst);
  const ModelOutput out = model_forward(m.params, x, m.kind.forward);
  const Gradients g = backward(m.params, out, inst.label, m.kind.forward);
  Mat sal(x.rows(), x.cols());
  for (std::size_t i = 0; i < sal.size(); ++i) sal.values()[i] = g.input.values()[i] * x.values()[i];
  return sal;
}

SaliencyMap pool_and_normalize(const Mat& raw, std::size_t block, bool per_row) {
  if (block == 0 || raw.cols() % block != 0) {
    throw UsageError("pooling block " + std::to_string(block) + " does not divide the feature width " +
                     std::to_string(raw.cols()));
  }
  SaliencyMap map;
  map.raw = raw;
  map.block = block;
  map.per_row = per_row;
  map.pooled = Mat(raw.rows(), raw.cols() / block);
  for (std::size_t r = 0; r < raw.rows(); ++r) {
    const auto src = raw.row(r);
    auto dst = map.pooled.row(r);
    for (std::size_t b = 0; b < dst.size(); ++b) {
      double acc = 0.0;
      for (std::size_t k = 0; k < block; ++k) acc += std::fabs(src[b * block + k]);
      dst[b] = acc / static_cast<double>(block);
    }
  }

  const auto rescale = [&map](std::span<double> cells) {
    if (cells.empty()) {
      map.norm_min.push_back(0.0);
      map.norm_max.push_back(0.0);
      return;
    }
    const auto [lo_it, hi_it] = std::minmax_element(cells.begin(), cells.end());
    const double lo = *lo_it;
    const double hi = *hi_it;
    map.norm_min.push_back(lo);
    map.norm_max.push_back(hi);
    for (double& v : cells) v = hi > lo ? std::clamp((v - lo) / (hi - lo), 0.0, 1.0) : 0.0;
  };
  if (per_row) {
    for (std::size_t r = 0; r < map.pooled.rows(); ++r) rescale(map.pooled.row(r));
  } else {
    rescale(map.pooled.values());
  }
  return map;
}

Mat mean_abs_map(const std::vector<Mat>& raws) {
  if (raws.empty()) throw UsageError("mean map of zero saliency maps");
  Mat acc(raws.front().rows(), raws.front().cols());
  for (const auto& m : raws) {
    if (m.rows() != acc.rows() || m.cols() != acc.cols()) throw DataError("saliency maps differ in shape");
    for (std::size_t i = 0; i < m.size(); ++i) acc.values()[i] += std::fabs(m.values()[i]);
  }
  for (double& v : acc.values()) v /= static_cast<double>(raws.size());
  return acc;
}

double occlusion_delta(const TrainedModel& m, const Instance& inst, const OcclusionSpec& spec, OcclusionClass cls) {
  require_gcn(m, "occlusion");
  const Mat x = instance_matrix(inst);
  const auto rows = spec.rows(m.params.dims.num_comet);
  Mat occluded = x;
  for (std::size_t r : rows) {
    if (r >= occluded.rows()) throw DataError("occluded row " + std::to_string(r) + " is out of range");
    std::fill(occluded.row(r).begin(), occluded.row(r).end(), 0.0);
  }
  const ModelOutput before = model_forward(m.params, x, m.kind.forward);
  const ModelOutput after = model_forward(m.params, occluded, m.kind.forward);
  const int c = cls == OcclusionClass::predicted ? before.predicted() : inst.label;
  const auto ci = static_cast<std::size_t>(c);
  return std::fabs(before.probabilities[ci] - after.probabilities[ci]);
}

double occlusion_metric(const Dataset& d, const DeltaFn& delta) {
  if (d.empty()) throw UsageError("occlusion metric over an empty dataset");
  double sum = 0.0;
  for (const auto& inst : d.instances) sum += delta(inst);
  return sum / static_cast<double>(d.size());
}

double occlusion_metric(const TrainedModel& m, const Dataset& d, const OcclusionSpec& spec, OcclusionClass cls) {
  require_gcn(m, "occlusion");
  return occlusion_metric(d, [&](const Instance& inst) { return occlusion_delta(m, inst, spec, cls); });
}

std::string to_pgm(const Mat& pooled, std::size_t scale) {
  scale = std::max<std::size_t>(1, scale);
  const std::size_t width = pooled.cols() * scale;
  const std::size_t height = pooled.rows() * scale;
  std::string out = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  out.reserve(out.size() + width * height);
  for (std::size_t r = 0; r < pooled.rows(); ++r) {
    std::string line;
    line.reserve(width);
    for (double v : pooled.row(r)) {
      const auto level = static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
      line.append(scale, static_cast<char>(level));
    }
    for (std::size_t s = 0; s < scale; ++s) out += line;
  }
  return out;
}

}  // namespace sarc
