// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "sarc/trainer.hpp"

namespace sarc {

struct PredictionRecord {
  std::string id;
  int gold = 0;
  int baseline = 0;
  int gcn = 0;
};

struct PredictionTable {
  std::vector<PredictionRecord> records;
};

// Pairs two runs evaluated on the same test split. Throws DataError when the
// instance ids or gold labels differ.
PredictionTable make_prediction_table(const RunOutcome& baseline, const RunOutcome& gcn);

PredictionTable restrict_to(const PredictionTable& t, const std::set<std::string>& ids);

// Fraction of records on which both models output the same label.
double prediction_overlap(const PredictionTable& t);

// Ids the gcn model gets wrong while the baseline gets right, in table order.
std::vector<std::string> gcn_only_wrong_set(const PredictionTable& t);

struct CoverageResult {
  std::vector<std::string> ids;  // the gcn-only-wrong set
  std::size_t nonsarcastic = 0;
  std::optional<double> coverage;  // empty when the set is empty
};

CoverageResult ns_coverage(const PredictionTable& t);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation; 0 below two values
  std::size_t count = 0;
};

MeanStd mean_std(const std::vector<double>& values);

struct RunAnalysis {
  std::uint64_t seed = 0;
  std::string split_signature;
  double overlap = 0.0;
  CoverageResult coverage;
  std::optional<CoverageResult> polarity_coverage;
};

// Baseline vs gcn metrics, computed per run on paired splits.
struct PairedAnalysis {
  std::string baseline_name;
  std::string gcn_name;
  std::vector<RunAnalysis> runs;
  MeanStd overlap;
  MeanStd coverage;           // over runs whose coverage is defined
  MeanStd gcn_only_wrong_size;
  bool polarity_subset = false;
  MeanStd polarity_coverage;
};

// Hex digest of the ordered test ids; equal digests mean equal splits.
std::string split_signature(const std::vector<std::string>& test_ids);

// `polarity_ids` restricts the polarity-contrast coverage to those instances
// (non-sarcastic plus polarity-contrast sarcasm).
PairedAnalysis analyze_runs(const ExperimentResult& baseline, const ExperimentResult& gcn,
                            const std::optional<std::set<std::string>>& polarity_ids = std::nullopt,
                            std::string baseline_name = "baseline", std::string gcn_name = "gcn");

nlohmann::json to_json(const CoverageResult& c);
nlohmann::json to_json(const PairedAnalysis& a);
PairedAnalysis paired_analysis_from_json(const nlohmann::json& j);

// One experiment row of a report table.
struct AblationRow {
  std::string name;   // describe(kind)
  std::string table;  // "accuracy_by_edge_config" | "input_row_removal"
  ModelKind kind;
  ExperimentResult result;
};

struct OcclusionSummary {
  std::string model;
  std::string class_rule;  // "predicted" | "gold"
  std::size_t instances = 0;
  std::optional<double> input_delta;  // unset when that segment was not occluded
  std::optional<double> comet_delta;
  std::string split_signature;  // empty when computed on a whole dataset
};

nlohmann::json to_json(const OcclusionSummary& o);
OcclusionSummary occlusion_summary_from_json(const nlohmann::json& j);

struct ReportInputs {
  std::vector<AblationRow> rows;
  std::optional<PairedAnalysis> analysis;
  std::optional<OcclusionSummary> occlusion;
  nlohmann::json provenance = nlohmann::json::object();
};

inline constexpr const char* kAccuracyTable = "accuracy_by_edge_config";
inline constexpr const char* kRemovalTable = "input_row_removal";

// Throws DataError if the inputs were not produced on the same test splits.
void check_consistent(const ReportInputs& in);

nlohmann::json report_json(const ReportInputs& in);
std::string report_text(const ReportInputs& in);

// Writes report.json and report.txt under `out_dir`.
void emit_report(const ReportInputs& in, const std::filesystem::path& out_dir);

}  // namespace sarc
