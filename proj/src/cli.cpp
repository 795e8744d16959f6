// SPDX-License-Identifier: Apache-2.0
#include "sarc/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "sarc/ablation.hpp"
#include "sarc/analysis.hpp"
#include "sarc/checkpoint.hpp"
#include "sarc/dataset.hpp"
#include "sarc/errors.hpp"
#include "sarc/io.hpp"
#include "sarc/saliency.hpp"
#include "sarc/trainer.hpp"

namespace sarc::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

json environment() {
  return {{"program", "sarclab"}, {"version", kVersion}, {"compiler", __VERSION__},
          {"cxx_standard", static_cast<long>(__cplusplus)}};
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

json read_json(const fs::path& path) {
  try {
    return json::parse(io::read_text(path));
  } catch (const json::parse_error& e) {
    throw DataError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

// Flags shared by train and ablate. CLI values win over the config file,
// which wins over built-in defaults.
struct TrainFlags {
  std::string config_path;
  std::string dataset;
  std::string out;
  double learning_rate = 0;
  std::size_t epochs = 0, batch_size = 0, hidden = 0, layers = 0, runs = 0, jobs = 0, patience = 0;
  std::uint64_t seed = 0;
  double train_fraction = 0;
  bool l2_normalize = false;

  CLI::Option* o_lr = nullptr;
  CLI::Option* o_epochs = nullptr;
  CLI::Option* o_batch = nullptr;
  CLI::Option* o_hidden = nullptr;
  CLI::Option* o_layers = nullptr;
  CLI::Option* o_runs = nullptr;
  CLI::Option* o_jobs = nullptr;
  CLI::Option* o_patience = nullptr;
  CLI::Option* o_seed = nullptr;
  CLI::Option* o_fraction = nullptr;
  CLI::Option* o_l2 = nullptr;
  CLI::Option* o_dataset = nullptr;
  CLI::Option* o_out = nullptr;

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "Experiment config JSON (flags override it)")
        ->check(CLI::ExistingFile);
    o_out = app->add_option("--out", out, "Output directory");
    o_lr = app->add_option("--lr", learning_rate, "Adam learning rate (default 1e-3)");
    o_epochs = app->add_option("--epochs", epochs, "Training epochs (default 30)");
    o_batch = app->add_option("--batch-size", batch_size, "Mini-batch size (default 32)");
    o_hidden = app->add_option("--hidden", hidden, "GraphSage output width N (default 128)");
    o_layers = app->add_option("--layers", layers, "GraphSage layers (default 1)");
    o_patience = app->add_option("--early-stopping", patience, "Stop after this many epochs without loss improvement (default off)");
    o_seed = app->add_option("--seed", seed, "Experiment seed (default 0)");
    o_fraction = app->add_option("--train-fraction", train_fraction, "Train split fraction (default 0.8)");
    o_runs = app->add_option("--runs", runs, "Independent split/train runs (default 5)");
    o_jobs = app->add_option("--jobs", jobs, "Concurrent workers (default 1)");
    o_l2 = app->add_flag("--l2-normalize", l2_normalize, "L2-normalize GraphSage node embeddings");
    o_dataset = app->add_option("dataset", dataset, "Dataset directory (manifest.json + embeddings.f32)");
  }
};

struct Resolved {
  json config;  // effective config, embedded in artifacts
  Hyperparams hp;
  double train_fraction = 0.8;
  std::size_t runs = 5;
  std::size_t jobs = 1;
  fs::path dataset;
  fs::path out;
};

Resolved resolve(const TrainFlags& f, json& file_config) {
  Resolved r;
  if (!f.config_path.empty()) file_config = read_json(f.config_path);
  if (!file_config.is_object()) file_config = json::object();
  try {
    r.hp = hyperparams_from_json(file_config.value("hyperparams", json::object()));
    if (file_config.contains("split")) r.train_fraction = file_config["split"].value("train_fraction", 0.8);
    r.runs = file_config.value("runs", std::size_t{5});
    r.jobs = file_config.value("jobs", std::size_t{1});
    if (file_config.contains("dataset")) r.dataset = file_config["dataset"].get<std::string>();
    if (file_config.contains("out")) r.out = file_config["out"].get<std::string>();
  } catch (const json::exception& e) {
    throw DataError(std::string("invalid config file: ") + e.what());
  }
  if (f.o_lr->count()) r.hp.learning_rate = f.learning_rate;
  if (f.o_epochs->count()) r.hp.epochs = f.epochs;
  if (f.o_batch->count()) r.hp.batch_size = f.batch_size;
  if (f.o_hidden->count()) r.hp.hidden = f.hidden;
  if (f.o_layers->count()) r.hp.layers = f.layers;
  if (f.o_patience->count()) r.hp.early_stopping_patience = f.patience;
  if (f.o_seed->count()) r.hp.seed = f.seed;
  if (f.o_fraction->count()) r.train_fraction = f.train_fraction;
  if (f.o_runs->count()) r.runs = f.runs;
  if (f.o_jobs->count()) r.jobs = f.jobs;
  if (f.o_dataset->count()) r.dataset = f.dataset;
  if (f.o_out->count()) r.out = f.out;

  validate(r.hp);
  if (r.runs == 0) throw UsageError("--runs must be at least 1");
  if (!(r.train_fraction > 0.0 && r.train_fraction < 1.0)) throw UsageError("--train-fraction must lie in (0, 1)");
  if (r.dataset.empty()) throw UsageError("no dataset given (positional argument or config 'dataset')");
  if (!fs::is_directory(r.dataset)) throw UsageError("dataset directory not found: " + r.dataset.string());
  if (r.out.empty()) throw UsageError("--out is required (flag or config 'out')");

  r.config = {{"hyperparams", to_json(r.hp)},
              {"split", {{"train_fraction", r.train_fraction}}},
              {"runs", r.runs},
              {"dataset", r.dataset.generic_string()}};
  return r;
}

json experiment_file(const std::string& name, const ModelKind& kind, const ExperimentResult& result,
                     const json& config) {
  return {{"format", "sarc-experiment"},
          {"name", name},
          {"kind", to_json(kind)},
          {"config", config},
          {"environment", environment()},
          {"result", to_json(result)}};
}

struct ExperimentFile {
  std::string name;
  ExperimentResult result;
};

ExperimentFile read_experiment(const fs::path& path) {
  const json j = read_json(path);
  if (j.value("format", std::string()) != "sarc-experiment") {
    throw DataError(path.string() + " is not a sarclab experiment result");
  }
  return {j.value("name", std::string("model")), experiment_result_from_json(j.at("result"))};
}

std::string safe_name(const std::string& id) {
  std::string s = id;
  for (char& c : s) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.')) c = '_';
  }
  return s;
}

json matrix_json(const Mat& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) rows.push_back(std::vector<double>(m.row(r).begin(), m.row(r).end()));
  return rows;
}

// ---- commands ------------------------------------------------------------

int cmd_validate(const std::string& dataset, bool as_json, std::ostream& out) {
  LoadOptions opts;
  opts.validate = false;
  const Dataset d = load_dataset(dataset, opts);
  const auto violations = validate_dataset(d);
  if (as_json) {
    json list = json::array();
    for (const auto& v : violations) {
      json jv = {{"kind", std::string(to_string(v.kind))}, {"instance", v.instance_id}, {"message", v.message}};
      if (v.row) jv["row"] = *v.row;
      if (v.col) jv["col"] = *v.col;
      list.push_back(std::move(jv));
    }
    out << dump({{"instances", d.size()}, {"dim", d.dim}, {"num_comet", d.num_comet}, {"violations", list}});
  } else {
    out << dataset << ": " << d.size() << " instances, D=" << d.dim << ", M=" << d.num_comet << "\n";
    for (const auto& v : violations) out << "  " << format_violation(v) << "\n";
    out << violations.size() << " violation(s)\n";
  }
  return violations.empty() ? kOk : kDataError;
}

ModelKind kind_from_flags(const std::string& model, const std::string& edges, bool drop, bool l2,
                          const json& file_config, bool model_set, bool edges_set, bool drop_set, bool l2_set) {
  json k = json::object();
  for (const char* key : {"model", "edges", "drop_input_row", "l2_normalize"}) {
    if (file_config.contains(key)) k[key] = file_config[key];
  }
  if (model_set) k["model"] = model;
  if (edges_set) k["edges"] = edges;
  if (drop_set) k["drop_input_row"] = drop;
  if (l2_set) k["l2_normalize"] = l2;
  return model_kind_from_json(k);
}

int cmd_train(const TrainFlags& f, const ModelKind& kind, const Resolved& r, std::ostream& out) {
  const Dataset d = load_dataset(r.dataset);
  const ExperimentResult result =
      run_experiment(kind, d, SplitSpec{r.train_fraction, r.hp.seed}, r.hp, r.runs, r.jobs);

  json config = r.config;
  config["kind"] = to_json(kind);
  io::ArtifactSet files;
  files.add("result.json", dump(experiment_file(describe(kind), kind, result, config)));
  for (std::size_t i = 0; i < result.runs.size(); ++i) {
    files.add("models/run" + std::to_string(i) + ".ckpt", encode_checkpoint(*result.runs[i].model));
  }
  files.commit(r.out);
  (void)f;
  out << describe(kind) << ": mean accuracy " << result.mean_accuracy << " (std " << result.std_accuracy << ") over "
      << result.runs.size() << " run(s); wrote " << (r.out / "result.json").string() << "\n";
  return kOk;
}

int cmd_ablate(const Resolved& r, bool l2, std::ostream& out) {
  const Dataset d = load_dataset(r.dataset);
  const auto rows = run_ablation(d, SplitSpec{r.train_fraction, r.hp.seed}, r.hp, r.runs, r.jobs, l2);

  json config = r.config;
  config["l2_normalize"] = l2;
  json jrows = json::array();
  io::ArtifactSet files;
  for (const auto& row : rows) {
    jrows.push_back({{"name", row.name},
                     {"table", row.table},
                     {"kind", to_json(row.kind)},
                     {"result", to_json(row.result)}});
    files.add("rows/" + row.name + ".json", dump(experiment_file(row.name, row.kind, row.result, config)));
    out << row.table << "  " << row.name << ": " << row.result.mean_accuracy << "\n";
  }
  files.add("ablation.json", dump({{"format", "sarc-ablation"},
                                   {"config", config},
                                   {"environment", environment()},
                                   {"rows", std::move(jrows)}}));
  files.commit(r.out);
  return kOk;
}

struct SaliencyFlags {
  std::string mode;
  std::string model;
  std::string dataset;
  std::string out;
  std::string segment = "both";
  std::string class_rule = "predicted";
  std::size_t block = 8;
  bool per_row = false;
  std::string result;
  std::size_t run = 0;
  std::size_t max_instances = 0;
  std::size_t pgm_scale = 4;
};

int cmd_saliency(const SaliencyFlags& f, std::ostream& out) {
  const TrainedModel m = load_checkpoint(f.model);
  if (m.kind.type != ModelType::gcn) throw UsageError("--model must be a gcn checkpoint; the baseline has no commonsense rows");
  Dataset d = load_dataset(f.dataset);
  if (d.dim != m.params.dims.input_dim || d.num_comet != m.params.dims.num_comet) {
    throw DataError("dataset is D=" + std::to_string(d.dim) + ", M=" + std::to_string(d.num_comet) +
                    " but the model expects D=" + std::to_string(m.params.dims.input_dim) +
                    ", M=" + std::to_string(m.params.dims.num_comet));
  }
  std::string signature;
  if (!f.result.empty()) {
    const auto exp = read_experiment(f.result);
    if (f.run >= exp.result.runs.size()) throw UsageError("--run " + std::to_string(f.run) + " is out of range");
    d = select_ids(d, exp.result.runs[f.run].test_ids);
    signature = split_signature(exp.result.runs[f.run].test_ids);
  }
  if (f.max_instances > 0 && d.size() > f.max_instances) d.instances.resize(f.max_instances);
  if (d.empty()) throw DataError("no instances to analyze");

  json config = {{"mode", f.mode},
                 {"model", fs::path(f.model).generic_string()},
                 {"model_kind", to_json(m.kind)},
                 {"dataset", fs::path(f.dataset).generic_string()},
                 {"result", f.result},
                 {"run", f.run},
                 {"max_instances", f.max_instances}};
  io::ArtifactSet files;

  if (f.mode == "gradient") {
    config["block"] = f.block;
    config["per_row"] = f.per_row;
    json maps = json::array();
    std::vector<Mat> raws;
    for (std::size_t i = 0; i < d.size(); ++i) {
      const auto& inst = d.instances[i];
      Mat raw = gradient_saliency(m, inst);
      const SaliencyMap map = pool_and_normalize(raw, f.block, f.per_row);
      char prefix[16];
      std::snprintf(prefix, sizeof prefix, "%05zu_", i);
      const std::string pgm = "heatmaps/" + std::string(prefix) + safe_name(inst.id) + ".pgm";
      files.add(pgm, to_pgm(map.pooled, f.pgm_scale));
      maps.push_back({{"id", inst.id},
                      {"label", inst.label},
                      {"raw", matrix_json(map.raw)},
                      {"pooled", matrix_json(map.pooled)},
                      {"norm_min", map.norm_min},
                      {"norm_max", map.norm_max},
                      {"heatmap", pgm}});
      raws.push_back(std::move(raw));
    }
    const SaliencyMap mean = pool_and_normalize(mean_abs_map(raws), f.block, f.per_row);
    files.add("heatmaps/mean.pgm", to_pgm(mean.pooled, f.pgm_scale));
    files.add("saliency.json", dump({{"format", "sarc-saliency"},
                                     {"config", config},
                                     {"environment", environment()},
                                     {"maps", std::move(maps)},
                                     {"mean", {{"pooled", matrix_json(mean.pooled)},
                                               {"norm_min", mean.norm_min},
                                               {"norm_max", mean.norm_max},
                                               {"heatmap", "heatmaps/mean.pgm"}}}}));
    files.commit(f.out);
    out << "gradient saliency for " << d.size() << " instance(s) written to " << f.out << "\n";
    return kOk;
  }

  const OcclusionClass cls = f.class_rule == "gold" ? OcclusionClass::gold : OcclusionClass::predicted;
  config["segment"] = f.segment;
  config["class"] = f.class_rule;
  OcclusionSummary summary;
  summary.model = describe(m.kind);
  summary.class_rule = f.class_rule;
  summary.instances = d.size();
  summary.split_signature = signature;
  json per_instance = json::array();
  std::vector<double> input_deltas, comet_deltas;
  const bool do_input = f.segment != "comet";
  const bool do_comet = f.segment != "input";
  for (const auto& inst : d.instances) {
    json ji = {{"id", inst.id}};
    if (do_input) {
      input_deltas.push_back(occlusion_delta(m, inst, {Segment::input_sentence}, cls));
      ji["input_delta"] = input_deltas.back();
    }
    if (do_comet) {
      comet_deltas.push_back(occlusion_delta(m, inst, {Segment::comet_sequences}, cls));
      ji["comet_delta"] = comet_deltas.back();
    }
    per_instance.push_back(std::move(ji));
  }
  const auto mean_of = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  json metrics = json::object();
  if (do_input) {
    summary.input_delta = mean_of(input_deltas);
    metrics["input"] = *summary.input_delta;
  }
  if (do_comet) {
    summary.comet_delta = mean_of(comet_deltas);
    metrics["comet"] = *summary.comet_delta;
  }
  files.add("occlusion.json", dump({{"format", "sarc-occlusion"},
                                    {"config", config},
                                    {"environment", environment()},
                                    {"metrics", metrics},
                                    {"summary", to_json(summary)},
                                    {"per_instance", std::move(per_instance)}}));
  files.commit(f.out);
  out << "occlusion metric over " << d.size() << " instance(s):";
  for (const auto& [k, v] : metrics.items()) out << " " << k << "=" << v.get<double>();
  out << "\n";
  return kOk;
}

int cmd_analyze(const std::string& baseline_path, const std::string& gcn_path, bool polarity,
                const std::string& dataset, const std::string& out_dir, std::ostream& out) {
  const auto base = read_experiment(baseline_path);
  const auto gcn = read_experiment(gcn_path);
  std::optional<std::set<std::string>> polarity_ids;
  if (polarity) {
    if (dataset.empty()) throw UsageError("--polarity-subset needs --dataset for the fine labels");
    const Dataset d = load_dataset(dataset);
    const Dataset subset = filter_fine_label(d, {FineLabel::polarity_contrast}, true);
    polarity_ids.emplace();
    for (const auto& inst : subset.instances) polarity_ids->insert(inst.id);
  }
  const PairedAnalysis a = analyze_runs(base.result, gcn.result, polarity_ids, base.name, gcn.name);
  json config = {{"baseline", fs::path(baseline_path).generic_string()},
                 {"gcn", fs::path(gcn_path).generic_string()},
                 {"polarity_subset", polarity},
                 {"dataset", fs::path(dataset).generic_string()}};
  io::ArtifactSet files;
  files.add("analysis.json", dump({{"format", "sarc-analysis"},
                                   {"config", config},
                                   {"environment", environment()},
                                   {"analysis", to_json(a)}}));
  files.commit(out_dir);
  out << "overlap " << a.overlap.mean << ", coverage "
      << (a.coverage.count ? std::to_string(a.coverage.mean) : std::string("undefined")) << "\n";
  return kOk;
}

int cmd_report(const std::string& ablation, const std::string& analysis, const std::string& occlusion,
               const std::string& out_dir, std::ostream& out) {
  ReportInputs in;
  json provenance = json::object();
  if (!ablation.empty()) {
    const json j = read_json(ablation);
    if (j.value("format", std::string()) != "sarc-ablation") throw DataError(ablation + " is not an ablation file");
    for (const auto& jr : j.at("rows")) {
      AblationRow row;
      row.name = jr.at("name").get<std::string>();
      row.table = jr.at("table").get<std::string>();
      row.kind = model_kind_from_json(jr.at("kind"));
      row.result = experiment_result_from_json(jr.at("result"));
      in.rows.push_back(std::move(row));
    }
    provenance["ablation"] = {{"path", fs::path(ablation).generic_string()}, {"config", j.at("config")}};
  }
  if (!analysis.empty()) {
    const json j = read_json(analysis);
    if (j.value("format", std::string()) != "sarc-analysis") throw DataError(analysis + " is not an analysis file");
    in.analysis = paired_analysis_from_json(j.at("analysis"));
    provenance["analysis"] = {{"path", fs::path(analysis).generic_string()}, {"config", j.at("config")}};
  }
  if (!occlusion.empty()) {
    const json j = read_json(occlusion);
    if (j.value("format", std::string()) != "sarc-occlusion") throw DataError(occlusion + " is not an occlusion file");
    in.occlusion = occlusion_summary_from_json(j.at("summary"));
    provenance["occlusion"] = {{"path", fs::path(occlusion).generic_string()}, {"config", j.at("config")}};
  }
  provenance["environment"] = environment();
  in.provenance = std::move(provenance);
  emit_report(in, out_dir);
  out << report_text(in);
  return kOk;
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"sarclab: commonsense-infused GraphSage sarcasm models, ablations, saliency and analysis"};
  app.name("sarclab");
  app.require_subcommand(1, 1);
  app.set_version_flag("--version", kVersion);

  // validate
  auto* validate_cmd = app.add_subcommand("validate", "Check a dataset directory against every format invariant");
  std::string validate_path;
  bool validate_json = false;
  validate_cmd->add_option("dataset", validate_path, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  validate_cmd->add_flag("--json", validate_json, "Print the report as JSON");

  // train
  auto* train_cmd = app.add_subcommand("train", "Train baseline or gcn models over repeated random splits");
  TrainFlags train_flags;
  std::string model_name = "gcn", edges_name = "bi";
  bool drop_input_row = false;
  auto* o_model = train_cmd->add_option("--model", model_name, "baseline | gcn")
                      ->check(CLI::IsMember({"baseline", "gcn"}));
  auto* o_edges = train_cmd->add_option("--edges", edges_name, "bi | in2c | c2in")
                      ->check(CLI::IsMember({"bi", "in2c", "c2in"}));
  auto* o_drop = train_cmd->add_flag("--drop-input-row", drop_input_row, "Remove the input row of V before the head");
  train_flags.attach(train_cmd);

  // ablate
  auto* ablate_cmd = app.add_subcommand("ablate", "Run the 7-configuration edge and input-row-removal sweep");
  TrainFlags ablate_flags;
  ablate_flags.attach(ablate_cmd);

  // saliency
  auto* saliency_cmd = app.add_subcommand("saliency", "Gradient x input maps or occlusion metrics for a gcn model");
  SaliencyFlags sal;
  saliency_cmd->add_option("--mode", sal.mode, "gradient | occlusion")
      ->required()
      ->check(CLI::IsMember({"gradient", "occlusion"}));
  saliency_cmd->add_option("--model", sal.model, "gcn checkpoint (.ckpt)")->required()->check(CLI::ExistingFile);
  saliency_cmd->add_option("--out", sal.out, "Output directory")->required();
  saliency_cmd->add_option("--segment", sal.segment, "Occluded segment: input | comet | both")
      ->check(CLI::IsMember({"input", "comet", "both"}));
  saliency_cmd->add_option("--class", sal.class_rule, "Tracked class: predicted | gold")
      ->check(CLI::IsMember({"predicted", "gold"}));
  saliency_cmd->add_option("--block", sal.block, "Pooling block width (default 8)");
  saliency_cmd->add_flag("--per-row", sal.per_row, "Normalize each row separately");
  saliency_cmd->add_option("--result", sal.result, "Restrict to the test split of this experiment result")
      ->check(CLI::ExistingFile);
  saliency_cmd->add_option("--run", sal.run, "Run index within --result (default 0)");
  saliency_cmd->add_option("--max-instances", sal.max_instances, "Analyze at most this many instances");
  saliency_cmd->add_option("--pgm-scale", sal.pgm_scale, "Heatmap pixels per cell (default 4)");
  saliency_cmd->add_option("dataset", sal.dataset, "Dataset directory")->required()->check(CLI::ExistingDirectory);

  // analyze
  auto* analyze_cmd = app.add_subcommand("analyze", "Prediction overlap and non-sarcastic coverage of two results");
  std::string an_base, an_gcn, an_dataset, an_out;
  bool an_polarity = false;
  analyze_cmd->add_option("--baseline", an_base, "Baseline experiment result JSON")->required()->check(CLI::ExistingFile);
  analyze_cmd->add_option("--gcn", an_gcn, "gcn experiment result JSON")->required()->check(CLI::ExistingFile);
  analyze_cmd->add_flag("--polarity-subset", an_polarity,
                        "Also report coverage on non-sarcastic + polarity-contrast instances");
  analyze_cmd->add_option("--dataset", an_dataset, "Dataset directory (fine labels for --polarity-subset)")
      ->check(CLI::ExistingDirectory);
  analyze_cmd->add_option("--out", an_out, "Output directory")->required();

  // report
  auto* report_cmd = app.add_subcommand("report", "Bundle ablation, analysis and occlusion outputs into one report");
  std::string rep_ablation, rep_analysis, rep_occlusion, rep_out;
  report_cmd->add_option("--ablation", rep_ablation, "ablation.json from `ablate`")->check(CLI::ExistingFile);
  report_cmd->add_option("--analysis", rep_analysis, "analysis.json from `analyze`")->check(CLI::ExistingFile);
  report_cmd->add_option("--occlusion", rep_occlusion, "occlusion.json from `saliency --mode occlusion`")
      ->check(CLI::ExistingFile);
  report_cmd->add_option("--out", rep_out, "Output directory")->required();

  app.footer([&app]() {
    std::string text = "\nCommands:\n";
    for (const auto* sub : app.get_subcommands({})) text += "\n" + sub->help("sarclab", CLI::AppFormatMode::Sub);
    text += "\nExit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.\n";
    return text;
  });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << "\n";
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "sarclab: " << e.what() << "\n";
    return kUsage;
  }

  try {
    if (*validate_cmd) return cmd_validate(validate_path, validate_json, out);
    if (*train_cmd) {
      json file_config;
      const Resolved r = resolve(train_flags, file_config);
      const ModelKind kind = kind_from_flags(model_name, edges_name, drop_input_row, train_flags.l2_normalize,
                                             file_config, o_model->count() > 0, o_edges->count() > 0,
                                             o_drop->count() > 0, train_flags.o_l2->count() > 0);
      return cmd_train(train_flags, kind, r, out);
    }
    if (*ablate_cmd) {
      json file_config;
      const Resolved r = resolve(ablate_flags, file_config);
      const bool l2 = ablate_flags.o_l2->count() ? ablate_flags.l2_normalize : file_config.value("l2_normalize", false);
      return cmd_ablate(r, l2, out);
    }
    if (*saliency_cmd) return cmd_saliency(sal, out);
    if (*analyze_cmd) return cmd_analyze(an_base, an_gcn, an_polarity, an_dataset, an_out, out);
    if (*report_cmd) return cmd_report(rep_ablation, rep_analysis, rep_occlusion, rep_out, out);
  } catch (const UsageError& e) {
    err << "sarclab: " << e.what() << "\n";
    return kUsage;
  } catch (const DataError& e) {
    err << "sarclab: " << e.what() << "\n";
    return kDataError;
  } catch (const NumericalError& e) {
    err << "sarclab: " << e.what() << "\n";
    return kNumerical;
  } catch (const nlohmann::json::exception& e) {
    err << "sarclab: malformed input: " << e.what() << "\n";
    return kDataError;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "sarclab: " << e.what() << "\n";
    return kDataError;
  }
  return kUsage;
}

}  // namespace sarc::cli
