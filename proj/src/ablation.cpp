// SPDX-License-Identifier: Apache-2.0
#include "sarc/ablation.hpp"

#include <cmath>
#include <future>

#include "sarc/errors.hpp"
#include "sarc/random.hpp"

namespace sarc {

std::vector<AblationConfig> ablation_configs(bool l2_normalize) {
  const auto gcn = [l2_normalize](EdgeConfig e, bool drop) {
    return ModelKind::gcn(ForwardConfig{e, drop, l2_normalize});
  };
  return {
      {kAccuracyTable, ModelKind::baseline()},
      {kAccuracyTable, gcn(EdgeConfig::bidirectional, false)},
      {kAccuracyTable, gcn(EdgeConfig::input_to_comet, false)},
      {kAccuracyTable, gcn(EdgeConfig::comet_to_input, false)},
      {kRemovalTable, gcn(EdgeConfig::bidirectional, true)},
      {kRemovalTable, gcn(EdgeConfig::comet_to_input, true)},
      {kRemovalTable, gcn(EdgeConfig::input_to_comet, true)},
  };
}

std::vector<AblationRow> run_ablation(const Dataset& d, const SplitSpec& split, const Hyperparams& hp,
                                      std::size_t runs, std::size_t jobs, bool l2_normalize) {
  const auto configs = ablation_configs(l2_normalize);
  const auto run_one = [&](const AblationConfig& c) {
    AblationRow row;
    row.name = describe(c.kind);
    row.table = c.table;
    row.kind = c.kind;
    try {
      row.result = run_experiment(c.kind, d, split, hp, runs);
    } catch (const NumericalError& e) {
      throw NumericalError(row.name + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError(row.name + ": " + e.what());
    }
    for (auto& r : row.result.runs) r.model.reset();
    return row;
  };

  std::vector<AblationRow> rows;
  jobs = std::max<std::size_t>(1, jobs);
  for (std::size_t start = 0; start < configs.size(); start += jobs) {
    std::vector<std::future<AblationRow>> wave;
    for (std::size_t i = start; i < std::min(configs.size(), start + jobs); ++i) {
      wave.push_back(std::async(jobs == 1 ? std::launch::deferred : std::launch::async, run_one, configs[i]));
    }
    for (auto& f : wave) rows.push_back(f.get());
  }
  return rows;
}

Dataset make_toy_dataset(const ToyConfig& cfg) {
  if (cfg.instances == 0 || cfg.dim == 0 || cfg.num_comet == 0) {
    throw UsageError("toy dataset needs positive instances, dim and num_comet");
  }
  Rng rng(cfg.seed);
  std::vector<double> direction(cfg.dim);
  double norm = 0.0;
  for (double& v : direction) {
    v = rng.normal();
    norm += v * v;
  }
  norm = std::sqrt(norm);
  for (double& v : direction) v /= norm;

  static const char* kWants[] = {"to have fun", "to go to bed", "to save money", "to be entertained"};
  static const char* kEffects[] = {"gets tired", "has to go to work", "learns something new", "feels happy"};

  Dataset d;
  d.dim = cfg.dim;
  d.num_comet = cfg.num_comet;
  d.relations = {"xWant", "xEffect"};
  d.relations.resize(cfg.num_comet);
  for (std::size_t r = 2; r < cfg.num_comet; ++r) d.relations[r] = "rel" + std::to_string(r);

  for (std::size_t i = 0; i < cfg.instances; ++i) {
    Instance inst;
    char id[32];
    std::snprintf(id, sizeof id, "toy-%05zu", i);
    inst.id = id;
    inst.embeddings = Matrix<float>(cfg.num_comet + 1, cfg.dim);
    double projection = 0.0;
    do {
      projection = 0.0;
      for (std::size_t c = 0; c < cfg.dim; ++c) {
        const auto v = static_cast<float>(rng.normal());
        inst.embeddings(0, c) = v;
        projection += static_cast<double>(v) * direction[c];
      }
    } while (std::fabs(projection) < cfg.margin);
    inst.label = projection > 0.0 ? kSarcastic : kNonSarcastic;
    const double sign = inst.label == kSarcastic ? 1.0 : -1.0;
    for (std::size_t r = 1; r <= cfg.num_comet; ++r) {
      for (std::size_t c = 0; c < cfg.dim; ++c) {
        inst.embeddings(r, c) = static_cast<float>(rng.normal() + cfg.comet_signal * sign * direction[c]);
      }
    }
    if (inst.label == kSarcastic) {
      static const FineLabel kinds[] = {FineLabel::polarity_contrast, FineLabel::situational,
                                        FineLabel::other_irony};
      inst.fine_label = kinds[rng.below(3)];
    } else {
      inst.fine_label = FineLabel::none;
    }
    inst.text = "synthetic sentence " + std::to_string(i);
    for (std::size_t r = 0; r < cfg.num_comet; ++r) {
      const auto pick = static_cast<std::size_t>(rng.below(4));
      inst.comet_texts.push_back(r % 2 == 0 ? std::string("PersonX wanted ") + kWants[pick]
                                            : std::string("PersonX ") + kEffects[pick]);
    }
    d.instances.push_back(std::move(inst));
  }
  return d;
}

}  // namespace sarc
