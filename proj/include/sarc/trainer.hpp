// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "sarc/dataset.hpp"
#include "sarc/model.hpp"

namespace sarc {

struct Hyperparams {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t batch_size = 32;
  std::size_t epochs = 30;
  std::size_t hidden = 128;
  std::size_t layers = 1;
  std::uint64_t seed = 0;
  // Stop once the epoch loss has not improved for this many epochs; 0 disables.
  std::size_t early_stopping_patience = 0;

  bool operator==(const Hyperparams&) const = default;
};

// Throws UsageError on out-of-range values.
void validate(const Hyperparams& hp);

enum class ModelType { baseline, gcn };

struct ModelKind {
  ModelType type = ModelType::gcn;
  ForwardConfig forward;  // ignored for the baseline

  static ModelKind baseline() { return {ModelType::baseline, {}}; }
  static ModelKind gcn(ForwardConfig fc) { return {ModelType::gcn, fc}; }

  bool operator==(const ModelKind&) const = default;
};

// "baseline", "gcn-bi", "gcn-c2in-drop", ...
std::string describe(const ModelKind& kind);

struct EpochStats {
  double loss = 0.0;
  double accuracy = 0.0;  // running accuracy over the epoch's batches
};

struct TrainedModel {
  ModelParams params;
  ModelKind kind;
  std::vector<EpochStats> history;
  Hyperparams hyperparams;
  std::uint64_t seed = 0;
};

// Double-precision copy of an instance's embedding rows.
Mat instance_matrix(const Instance& inst);

ModelOutput predict(const TrainedModel& m, const Mat& x);

TrainedModel train(const ModelKind& kind, const Dataset& train_set, const Hyperparams& hp);

struct Evaluation {
  double accuracy = 0.0;
  std::vector<int> predictions;
  std::vector<double> confidences;  // probability of the predicted class
};

Evaluation evaluate(const TrainedModel& m, const Dataset& d);

struct RunOutcome {
  std::uint64_t seed = 0;
  double accuracy = 0.0;
  std::vector<std::string> test_ids;
  std::vector<int> gold;
  std::vector<int> predictions;
  std::vector<double> confidences;
  std::optional<TrainedModel> model;  // not serialized
};

struct ExperimentResult {
  std::vector<RunOutcome> runs;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;  // sample standard deviation; 0 for a single run
};

// Mean and sample standard deviation of the runs' accuracies.
void summarize(ExperimentResult& result);

using RunFn = std::function<RunOutcome(std::size_t run, std::uint64_t seed, const Dataset& train,
                                       const Dataset& test)>;

// Run i splits and trains with derive_seed(seed, i). Runs may execute on up to
// `jobs` threads; results are ordered by run index.
ExperimentResult run_experiment(const Dataset& d, double train_fraction, std::uint64_t seed, std::size_t runs,
                                const RunFn& run_fn, std::size_t jobs = 1);

ExperimentResult run_experiment(const ModelKind& kind, const Dataset& d, const SplitSpec& split,
                                const Hyperparams& hp, std::size_t runs = 5, std::size_t jobs = 1);

nlohmann::json to_json(const Hyperparams& hp);
Hyperparams hyperparams_from_json(const nlohmann::json& j, Hyperparams defaults = {});
nlohmann::json to_json(const ModelKind& kind);
ModelKind model_kind_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentResult& r);
ExperimentResult experiment_result_from_json(const nlohmann::json& j);

}  // namespace sarc
