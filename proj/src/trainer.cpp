// SPDX-License-Identifier: Apache-2.0
#include "sarc/trainer.hpp"

#include <cmath>
#include <future>
#include <limits>
#include <numeric>
#include <set>

#include "sarc/errors.hpp"
#include "sarc/optimizer.hpp"
#include "sarc/random.hpp"

namespace sarc {

using nlohmann::json;

void validate(const Hyperparams& hp) {
  if (!(hp.learning_rate >= 0.0) || !std::isfinite(hp.learning_rate)) {
    throw UsageError("learning_rate must be a finite non-negative number");
  }
  if (!(hp.beta1 > 0.0 && hp.beta1 < 1.0)) throw UsageError("beta1 must lie in (0, 1)");
  if (!(hp.beta2 > 0.0 && hp.beta2 < 1.0)) throw UsageError("beta2 must lie in (0, 1)");
  if (!(hp.epsilon > 0.0)) throw UsageError("epsilon must be positive");
  if (hp.batch_size == 0) throw UsageError("batch_size must be positive");
  if (hp.epochs == 0) throw UsageError("epochs must be positive");
  if (hp.hidden == 0) throw UsageError("hidden must be positive");
  if (hp.layers == 0) throw UsageError("layers must be positive");
}

std::string describe(const ModelKind& kind) {
  if (kind.type == ModelType::baseline) return "baseline";
  std::string s = "gcn-" + std::string(to_string(kind.forward.edges));
  if (kind.forward.drop_input_row) s += "-drop";
  if (kind.forward.l2_normalize) s += "-l2";
  return s;
}

Mat instance_matrix(const Instance& inst) { return matrix_cast<double>(inst.embeddings); }

ModelOutput predict(const TrainedModel& m, const Mat& x) {
  if (m.kind.type == ModelType::baseline) return baseline_forward(m.params, x.row(0));
  return model_forward(m.params, x, m.kind.forward);
}

namespace {

void add_into(ModelParams& acc, const ModelParams& g) {
  auto a = acc.tensors();
  auto b = g.tensors();
  for (std::size_t t = 0; t < a.size(); ++t) {
    for (std::size_t i = 0; i < a[t].size(); ++i) a[t][i] += b[t][i];
  }
}

void scale(ModelParams& p, double s) {
  for (auto t : p.tensors()) {
    for (double& v : t) v *= s;
  }
}

void check_compatible(const ModelKind& kind, const Dataset& d) {
  if (d.empty()) throw UsageError("training set is empty");
  if (kind.type == ModelType::gcn && kind.forward.drop_input_row && d.num_comet == 0) {
    throw UsageError("drop_input_row needs at least one commonsense row");
  }
  for (const auto& inst : d.instances) {
    if (inst.embeddings.rows() != d.num_comet + 1 || inst.embeddings.cols() != d.dim) {
      throw DataError("instance '" + inst.id + "' does not match the dataset dimensions");
    }
  }
}

}  // namespace

TrainedModel train(const ModelKind& kind, const Dataset& train_set, const Hyperparams& hp) {
  validate(hp);
  check_compatible(kind, train_set);

  const bool baseline = kind.type == ModelType::baseline;
  const bool drop = !baseline && kind.forward.drop_input_row;
  const ModelDims dims{train_set.dim, hp.hidden, train_set.num_comet, hp.layers};

  Rng rng(hp.seed);
  TrainedModel model;
  model.kind = kind;
  model.hyperparams = hp;
  model.seed = hp.seed;
  model.params = ModelParams::glorot(dims, drop, rng);

  std::vector<Mat> inputs;
  inputs.reserve(train_set.size());
  for (const auto& inst : train_set.instances) inputs.push_back(instance_matrix(inst));

  Adam adam(model.params, drop, {hp.learning_rate, hp.beta1, hp.beta2, hp.epsilon});
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  double best_loss = std::numeric_limits<double>::infinity();
  std::size_t stale_epochs = 0;
  for (std::size_t epoch = 0; epoch < hp.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    double loss_sum = 0.0;
    std::size_t correct = 0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += hp.batch_size, ++batch_index) {
      const std::size_t end = std::min(order.size(), start + hp.batch_size);
      ModelParams grad_sum = ModelParams::zeros(dims, drop);
      double batch_loss = 0.0;
      for (std::size_t k = start; k < end; ++k) {
        const std::size_t idx = order[k];
        const int label = train_set.instances[idx].label;
        const ModelOutput out = predict(model, inputs[idx]);
        const Gradients g =
            baseline ? baseline_backward(model.params, out, label) : backward(model.params, out, label, kind.forward);
        batch_loss += g.loss;
        if (out.predicted() == label) ++correct;
        add_into(grad_sum, g.params);
      }
      if (!std::isfinite(batch_loss)) {
        throw NumericalError("training diverged: non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                             std::to_string(batch_index));
      }
      scale(grad_sum, 1.0 / static_cast<double>(end - start));
      adam.step(model.params, grad_sum);
      loss_sum += batch_loss;
    }
    const double n = static_cast<double>(train_set.size());
    model.history.push_back({loss_sum / n, static_cast<double>(correct) / n});

    if (hp.early_stopping_patience > 0) {
      const double loss = model.history.back().loss;
      if (loss < best_loss) {
        best_loss = loss;
        stale_epochs = 0;
      } else if (++stale_epochs >= hp.early_stopping_patience) {
        break;
      }
    }
  }
  return model;
}

Evaluation evaluate(const TrainedModel& m, const Dataset& d) {
  if (d.empty()) throw UsageError("cannot evaluate on an empty dataset");
  Evaluation ev;
  ev.predictions.reserve(d.size());
  ev.confidences.reserve(d.size());
  std::size_t correct = 0;
  for (const auto& inst : d.instances) {
    const ModelOutput out = predict(m, instance_matrix(inst));
    const int pred = out.predicted();
    ev.predictions.push_back(pred);
    ev.confidences.push_back(out.probabilities[static_cast<std::size_t>(pred)]);
    if (pred == inst.label) ++correct;
  }
  ev.accuracy = static_cast<double>(correct) / static_cast<double>(d.size());
  return ev;
}

void summarize(ExperimentResult& result) {
  const std::size_t n = result.runs.size();
  if (n == 0) {
    result.mean_accuracy = 0.0;
    result.std_accuracy = 0.0;
    return;
  }
  double sum = 0.0;
  for (const auto& r : result.runs) sum += r.accuracy;
  result.mean_accuracy = sum / static_cast<double>(n);
  if (n < 2) {
    result.std_accuracy = 0.0;
    return;
  }
  double ss = 0.0;
  for (const auto& r : result.runs) ss += (r.accuracy - result.mean_accuracy) * (r.accuracy - result.mean_accuracy);
  result.std_accuracy = std::sqrt(ss / static_cast<double>(n - 1));
}

ExperimentResult run_experiment(const Dataset& d, double train_fraction, std::uint64_t seed, std::size_t runs,
                                const RunFn& run_fn, std::size_t jobs) {
  if (runs == 0) throw UsageError("runs must be at least 1");
  jobs = std::max<std::size_t>(1, jobs);

  const auto one_run = [&](std::size_t i) {
    const std::uint64_t run_seed = derive_seed(seed, i);
    try {
      auto [train_set, test_set] = split_dataset(d, {train_fraction, run_seed});
      RunOutcome outcome = run_fn(i, run_seed, train_set, test_set);
      outcome.seed = run_seed;
      return outcome;
    } catch (const NumericalError& e) {
      throw NumericalError("run " + std::to_string(i) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError("run " + std::to_string(i) + ": " + e.what());
    } catch (const UsageError& e) {
      throw UsageError("run " + std::to_string(i) + ": " + e.what());
    }
  };

  ExperimentResult result;
  result.runs.reserve(runs);
  if (jobs == 1) {
    for (std::size_t i = 0; i < runs; ++i) result.runs.push_back(one_run(i));
  } else {
    for (std::size_t start = 0; start < runs; start += jobs) {
      std::vector<std::future<RunOutcome>> wave;
      for (std::size_t i = start; i < std::min(runs, start + jobs); ++i) {
        wave.push_back(std::async(std::launch::async, one_run, i));
      }
      for (auto& f : wave) result.runs.push_back(f.get());
    }
  }
  summarize(result);
  return result;
}

ExperimentResult run_experiment(const ModelKind& kind, const Dataset& d, const SplitSpec& split,
                                const Hyperparams& hp, std::size_t runs, std::size_t jobs) {
  validate(hp);
  const RunFn fn = [&](std::size_t, std::uint64_t run_seed, const Dataset& train_set, const Dataset& test_set) {
    Hyperparams run_hp = hp;
    run_hp.seed = run_seed;
    TrainedModel model = train(kind, train_set, run_hp);
    Evaluation ev = evaluate(model, test_set);
    RunOutcome out;
    out.accuracy = ev.accuracy;
    for (const auto& inst : test_set.instances) {
      out.test_ids.push_back(inst.id);
      out.gold.push_back(inst.label);
    }
    out.predictions = std::move(ev.predictions);
    out.confidences = std::move(ev.confidences);
    out.model = std::move(model);
    return out;
  };
  return run_experiment(d, split.train_fraction, hp.seed, runs, fn, jobs);
}

json to_json(const Hyperparams& hp) {
  return {{"learning_rate", hp.learning_rate},
          {"beta1", hp.beta1},
          {"beta2", hp.beta2},
          {"epsilon", hp.epsilon},
          {"batch_size", hp.batch_size},
          {"epochs", hp.epochs},
          {"hidden", hp.hidden},
          {"layers", hp.layers},
          {"seed", hp.seed},
          {"early_stopping_patience", hp.early_stopping_patience}};
}

Hyperparams hyperparams_from_json(const json& j, Hyperparams hp) {
  if (!j.is_object()) throw DataError("hyperparams must be a JSON object");
  static const std::set<std::string> known = {"learning_rate", "beta1",  "beta2",  "epsilon",
                                              "batch_size",    "epochs", "hidden", "layers",
                                              "seed",          "early_stopping_patience"};
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw DataError("unknown hyperparameter '" + key + "'");
  }
  try {
    hp.learning_rate = j.value("learning_rate", hp.learning_rate);
    hp.beta1 = j.value("beta1", hp.beta1);
    hp.beta2 = j.value("beta2", hp.beta2);
    hp.epsilon = j.value("epsilon", hp.epsilon);
    hp.batch_size = j.value("batch_size", hp.batch_size);
    hp.epochs = j.value("epochs", hp.epochs);
    hp.hidden = j.value("hidden", hp.hidden);
    hp.layers = j.value("layers", hp.layers);
    hp.seed = j.value("seed", hp.seed);
    hp.early_stopping_patience = j.value("early_stopping_patience", hp.early_stopping_patience);
  } catch (const json::exception& e) {
    throw DataError(std::string("invalid hyperparameter value: ") + e.what());
  }
  return hp;
}

json to_json(const ModelKind& kind) {
  if (kind.type == ModelType::baseline) return {{"model", "baseline"}};
  return {{"model", "gcn"},
          {"edges", std::string(to_string(kind.forward.edges))},
          {"drop_input_row", kind.forward.drop_input_row},
          {"l2_normalize", kind.forward.l2_normalize}};
}

ModelKind model_kind_from_json(const json& j) {
  const std::string model = j.value("model", std::string("gcn"));
  if (model == "baseline") return ModelKind::baseline();
  if (model != "gcn") throw DataError("unknown model kind '" + model + "'");
  ForwardConfig fc;
  const std::string edges = j.value("edges", std::string("bi"));
  auto parsed = parse_edge_config(edges);
  if (!parsed) throw DataError("unknown edge configuration '" + edges + "'");
  fc.edges = *parsed;
  fc.drop_input_row = j.value("drop_input_row", false);
  fc.l2_normalize = j.value("l2_normalize", false);
  return ModelKind::gcn(fc);
}

json to_json(const ExperimentResult& r) {
  json runs = json::array();
  for (const auto& run : r.runs) {
    runs.push_back({{"seed", run.seed},
                    {"accuracy", run.accuracy},
                    {"test_ids", run.test_ids},
                    {"gold", run.gold},
                    {"predictions", run.predictions},
                    {"confidences", run.confidences}});
  }
  return {{"runs", std::move(runs)}, {"mean_accuracy", r.mean_accuracy}, {"std_accuracy", r.std_accuracy}};
}

ExperimentResult experiment_result_from_json(const json& j) {
  ExperimentResult r;
  try {
    for (const auto& run : j.at("runs")) {
      RunOutcome o;
      o.seed = run.at("seed").get<std::uint64_t>();
      o.accuracy = run.at("accuracy").get<double>();
      o.test_ids = run.at("test_ids").get<std::vector<std::string>>();
      o.gold = run.at("gold").get<std::vector<int>>();
      o.predictions = run.at("predictions").get<std::vector<int>>();
      o.confidences = run.at("confidences").get<std::vector<double>>();
      if (o.gold.size() != o.test_ids.size() || o.predictions.size() != o.test_ids.size()) {
        throw DataError("experiment run has mismatched id/label/prediction lengths");
      }
      r.runs.push_back(std::move(o));
    }
    r.mean_accuracy = j.at("mean_accuracy").get<double>();
    r.std_accuracy = j.at("std_accuracy").get<double>();
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed experiment result: ") + e.what());
  }
  return r;
}

}  // namespace sarc
