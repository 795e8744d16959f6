// SPDX-License-Identifier: Apache-2.0
#include "sarc/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <sstream>

#include "sarc/errors.hpp"
#include "sarc/io.hpp"

namespace sarc {

using nlohmann::json;

PredictionTable make_prediction_table(const RunOutcome& baseline, const RunOutcome& gcn) {
  if (baseline.test_ids != gcn.test_ids) {
    throw DataError("baseline and gcn predictions cover different instance sets (seeds " +
                    std::to_string(baseline.seed) + " vs " + std::to_string(gcn.seed) + ")");
  }
  if (baseline.gold != gcn.gold) throw DataError("baseline and gcn tables disagree on gold labels");
  if (baseline.predictions.size() != baseline.test_ids.size() || gcn.predictions.size() != gcn.test_ids.size()) {
    throw DataError("prediction vector length differs from the number of test ids");
  }
  PredictionTable t;
  t.records.reserve(baseline.test_ids.size());
  for (std::size_t i = 0; i < baseline.test_ids.size(); ++i) {
    t.records.push_back({baseline.test_ids[i], baseline.gold[i], baseline.predictions[i], gcn.predictions[i]});
  }
  return t;
}

PredictionTable restrict_to(const PredictionTable& t, const std::set<std::string>& ids) {
  PredictionTable out;
  for (const auto& r : t.records) {
    if (ids.contains(r.id)) out.records.push_back(r);
  }
  return out;
}

double prediction_overlap(const PredictionTable& t) {
  if (t.records.empty()) throw UsageError("prediction overlap of an empty table");
  std::size_t same = 0;
  for (const auto& r : t.records) same += r.baseline == r.gcn ? 1 : 0;
  return static_cast<double>(same) / static_cast<double>(t.records.size());
}

std::vector<std::string> gcn_only_wrong_set(const PredictionTable& t) {
  std::vector<std::string> ids;
  for (const auto& r : t.records) {
    if (r.gcn != r.gold && r.baseline == r.gold) ids.push_back(r.id);
  }
  return ids;
}

CoverageResult ns_coverage(const PredictionTable& t) {
  CoverageResult c;
  for (const auto& r : t.records) {
    if (r.gcn != r.gold && r.baseline == r.gold) {
      c.ids.push_back(r.id);
      if (r.gold == kNonSarcastic) ++c.nonsarcastic;
    }
  }
  if (!c.ids.empty()) c.coverage = static_cast<double>(c.nonsarcastic) / static_cast<double>(c.ids.size());
  return c;
}

MeanStd mean_std(const std::vector<double>& values) {
  MeanStd s;
  s.count = values.size();
  if (values.empty()) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return s;
}

std::string split_signature(const std::vector<std::string>& test_ids) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& id : test_ids) {
    for (unsigned char c : id) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    h ^= 0xFF;  // separator
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

PairedAnalysis analyze_runs(const ExperimentResult& baseline, const ExperimentResult& gcn,
                            const std::optional<std::set<std::string>>& polarity_ids, std::string baseline_name,
                            std::string gcn_name) {
  if (baseline.runs.size() != gcn.runs.size()) {
    throw DataError("baseline has " + std::to_string(baseline.runs.size()) + " runs, gcn has " +
                    std::to_string(gcn.runs.size()));
  }
  if (baseline.runs.empty()) throw DataError("no runs to analyze");
  PairedAnalysis a;
  a.baseline_name = std::move(baseline_name);
  a.gcn_name = std::move(gcn_name);
  a.polarity_subset = polarity_ids.has_value();
  std::vector<double> overlaps, coverages, sizes, polarity;
  for (std::size_t i = 0; i < baseline.runs.size(); ++i) {
    const auto& b = baseline.runs[i];
    const auto& g = gcn.runs[i];
    if (b.seed != g.seed) throw DataError("run " + std::to_string(i) + " was not paired by split seed");
    const PredictionTable t = make_prediction_table(b, g);
    RunAnalysis r;
    r.seed = b.seed;
    r.split_signature = split_signature(b.test_ids);
    r.overlap = prediction_overlap(t);
    r.coverage = ns_coverage(t);
    overlaps.push_back(r.overlap);
    sizes.push_back(static_cast<double>(r.coverage.ids.size()));
    if (r.coverage.coverage) coverages.push_back(*r.coverage.coverage);
    if (polarity_ids) {
      r.polarity_coverage = ns_coverage(restrict_to(t, *polarity_ids));
      if (r.polarity_coverage->coverage) polarity.push_back(*r.polarity_coverage->coverage);
    }
    a.runs.push_back(std::move(r));
  }
  a.overlap = mean_std(overlaps);
  a.coverage = mean_std(coverages);
  a.gcn_only_wrong_size = mean_std(sizes);
  a.polarity_coverage = mean_std(polarity);
  return a;
}

namespace {

json to_json(const MeanStd& s) {
  if (s.count == 0) return {{"mean", nullptr}, {"std", nullptr}, {"count", 0}};
  return {{"mean", s.mean}, {"std", s.std}, {"count", s.count}};
}

MeanStd mean_std_from_json(const json& j) {
  const auto count = j.at("count").get<std::size_t>();
  if (count == 0) return {};
  return {j.at("mean").get<double>(), j.at("std").get<double>(), count};
}

CoverageResult coverage_from_json(const json& j) {
  CoverageResult c;
  c.ids = j.at("ids").get<std::vector<std::string>>();
  c.nonsarcastic = j.at("nonsarcastic").get<std::size_t>();
  if (!j.at("coverage").is_null()) c.coverage = j.at("coverage").get<double>();
  return c;
}

std::string pct(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << 100.0 * v << "%";
  return os.str();
}

}  // namespace

json to_json(const CoverageResult& c) {
  return {{"ids", c.ids},
          {"size", c.ids.size()},
          {"nonsarcastic", c.nonsarcastic},
          {"defined", c.coverage.has_value()},
          {"coverage", c.coverage ? json(*c.coverage) : json(nullptr)}};
}

json to_json(const PairedAnalysis& a) {
  json runs = json::array();
  for (const auto& r : a.runs) {
    json jr = {{"seed", r.seed},
               {"split_signature", r.split_signature},
               {"overlap", r.overlap},
               {"coverage", to_json(r.coverage)}};
    jr["polarity_coverage"] = r.polarity_coverage ? to_json(*r.polarity_coverage) : json(nullptr);
    runs.push_back(std::move(jr));
  }
  return {{"baseline", a.baseline_name},
          {"gcn", a.gcn_name},
          {"runs", std::move(runs)},
          {"overlap", to_json(a.overlap)},
          {"coverage", to_json(a.coverage)},
          {"gcn_only_wrong_size", to_json(a.gcn_only_wrong_size)},
          {"polarity_subset", a.polarity_subset},
          {"polarity_coverage", to_json(a.polarity_coverage)}};
}

PairedAnalysis paired_analysis_from_json(const json& j) {
  PairedAnalysis a;
  try {
    a.baseline_name = j.at("baseline").get<std::string>();
    a.gcn_name = j.at("gcn").get<std::string>();
    for (const auto& jr : j.at("runs")) {
      RunAnalysis r;
      r.seed = jr.at("seed").get<std::uint64_t>();
      r.split_signature = jr.at("split_signature").get<std::string>();
      r.overlap = jr.at("overlap").get<double>();
      r.coverage = coverage_from_json(jr.at("coverage"));
      if (!jr.at("polarity_coverage").is_null()) r.polarity_coverage = coverage_from_json(jr.at("polarity_coverage"));
      a.runs.push_back(std::move(r));
    }
    a.overlap = mean_std_from_json(j.at("overlap"));
    a.coverage = mean_std_from_json(j.at("coverage"));
    a.gcn_only_wrong_size = mean_std_from_json(j.at("gcn_only_wrong_size"));
    a.polarity_subset = j.at("polarity_subset").get<bool>();
    a.polarity_coverage = mean_std_from_json(j.at("polarity_coverage"));
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed analysis file: ") + e.what());
  }
  return a;
}

json to_json(const OcclusionSummary& o) {
  const auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  return {{"model", o.model},
          {"class_rule", o.class_rule},
          {"instances", o.instances},
          {"input_delta", opt(o.input_delta)},
          {"comet_delta", opt(o.comet_delta)},
          {"split_signature", o.split_signature}};
}

OcclusionSummary occlusion_summary_from_json(const json& j) {
  const auto opt = [](const json& v) { return v.is_null() ? std::optional<double>() : v.get<double>(); };
  try {
    OcclusionSummary o;
    o.model = j.at("model").get<std::string>();
    o.class_rule = j.at("class_rule").get<std::string>();
    o.instances = j.at("instances").get<std::size_t>();
    o.input_delta = opt(j.at("input_delta"));
    o.comet_delta = opt(j.at("comet_delta"));
    o.split_signature = j.value("split_signature", std::string());
    return o;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed occlusion file: ") + e.what());
  }
}

void check_consistent(const ReportInputs& in) {
  std::vector<std::string> reference;
  std::string reference_name;
  for (const auto& row : in.rows) {
    std::vector<std::string> sigs;
    for (const auto& r : row.result.runs) sigs.push_back(split_signature(r.test_ids));
    if (reference_name.empty()) {
      reference = std::move(sigs);
      reference_name = row.name;
    } else if (sigs != reference) {
      throw DataError("experiment rows '" + reference_name + "' and '" + row.name + "' used different test splits");
    }
  }
  if (in.analysis && !reference_name.empty()) {
    std::vector<std::string> sigs;
    for (const auto& r : in.analysis->runs) sigs.push_back(r.split_signature);
    if (sigs != reference) throw DataError("analysis was computed on different test splits than the experiments");
  }
  if (in.occlusion && !in.occlusion->split_signature.empty()) {
    std::vector<std::string> known = reference;
    if (in.analysis) {
      for (const auto& r : in.analysis->runs) known.push_back(r.split_signature);
    }
    if (!known.empty() && std::find(known.begin(), known.end(), in.occlusion->split_signature) == known.end()) {
      throw DataError("occlusion metrics were computed on a test split not used by the other inputs");
    }
  }
}

json report_json(const ReportInputs& in) {
  check_consistent(in);
  json accuracy = json::array();
  json removal = json::array();
  for (const auto& row : in.rows) {
    json runs = json::array();
    for (const auto& r : row.result.runs) runs.push_back({{"seed", r.seed}, {"accuracy", r.accuracy}});
    json jr = {{"name", row.name},
               {"config", to_json(row.kind)},
               {"mean_accuracy", row.result.mean_accuracy},
               {"std_accuracy", row.result.std_accuracy},
               {"runs", std::move(runs)}};
    if (row.table == kAccuracyTable) {
      accuracy.push_back(std::move(jr));
    } else if (row.table == kRemovalTable) {
      removal.push_back(std::move(jr));
    } else {
      throw DataError("experiment row '" + row.name + "' names unknown table '" + row.table + "'");
    }
  }
  json report = {{"format", "sarc-report"},
                 {"version", 1},
                 {kAccuracyTable, std::move(accuracy)},
                 {kRemovalTable, std::move(removal)},
                 {"provenance", in.provenance}};
  if (in.analysis) {
    const auto& a = *in.analysis;
    report["prediction_overlap"] = {
        {"baseline", a.baseline_name}, {"gcn", a.gcn_name}, {"overlap", to_json(a.overlap)}};
    report["ns_coverage"] = {{"baseline", a.baseline_name},
                             {"gcn", a.gcn_name},
                             {"coverage", to_json(a.coverage)},
                             {"gcn_only_wrong_size", to_json(a.gcn_only_wrong_size)},
                             {"runs", to_json(a)["runs"]}};
    report["polarity_subset_coverage"] =
        a.polarity_subset ? json{{"coverage", to_json(a.polarity_coverage)}} : json(nullptr);
  } else {
    report["prediction_overlap"] = nullptr;
    report["ns_coverage"] = nullptr;
    report["polarity_subset_coverage"] = nullptr;
  }
  report["occlusion"] = in.occlusion ? to_json(*in.occlusion) : json(nullptr);
  return report;
}

std::string report_text(const ReportInputs& in) {
  check_consistent(in);
  std::ostringstream os;
  const auto table = [&](const char* title, const char* key) {
    os << "== " << title << " ==\n";
    os << std::left << std::setw(24) << "model" << std::right << std::setw(12) << "mean_acc" << std::setw(12)
       << "std_acc" << std::setw(6) << "runs" << "\n";
    bool any = false;
    for (const auto& row : in.rows) {
      if (row.table != key) continue;
      any = true;
      os << std::left << std::setw(24) << row.name << std::right << std::setw(12) << pct(row.result.mean_accuracy)
         << std::setw(12) << pct(row.result.std_accuracy) << std::setw(6) << row.result.runs.size() << "\n";
    }
    if (!any) os << "(not available)\n";
    os << "\n";
  };
  table("Accuracy by edge configuration", kAccuracyTable);
  table("Input row removal", kRemovalTable);

  os << "== Prediction overlap ==\n";
  if (in.analysis) {
    const auto& a = *in.analysis;
    os << std::left << std::setw(24) << "pair" << std::right << std::setw(12) << "mean" << std::setw(12) << "std"
       << std::setw(6) << "runs" << "\n";
    os << std::left << std::setw(24) << (a.baseline_name + " vs " + a.gcn_name) << std::right << std::setw(12)
       << pct(a.overlap.mean) << std::setw(12) << pct(a.overlap.std) << std::setw(6) << a.overlap.count << "\n";
  } else {
    os << "(not available)\n";
  }
  os << "\n== Occlusion confidence change ==\n";
  if (in.occlusion) {
    os << std::left << std::setw(24) << "occluded segment" << std::right << std::setw(12) << "delta" << "\n";
    const auto cell = [](const std::optional<double>& v) { return v ? pct(*v) : std::string("-"); };
    os << std::left << std::setw(24) << "input sentence" << std::right << std::setw(12)
       << cell(in.occlusion->input_delta) << "\n";
    os << std::left << std::setw(24) << "comet sequences" << std::right << std::setw(12)
       << cell(in.occlusion->comet_delta) << "\n";
  } else {
    os << "(not available)\n";
  }
  const auto coverage_line = [&](const char* label, const MeanStd& s, std::size_t runs) {
    os << std::left << std::setw(24) << "subset" << std::right << std::setw(12) << "mean" << std::setw(12) << "std"
       << std::setw(14) << "defined_runs" << "\n";
    os << std::left << std::setw(24) << label << std::right << std::setw(12)
       << (s.count ? pct(s.mean) : std::string("undefined")) << std::setw(12)
       << (s.count ? pct(s.std) : std::string("-")) << std::setw(14)
       << (std::to_string(s.count) + "/" + std::to_string(runs)) << "\n";
  };
  os << "\n== Non-sarcastic class coverage ==\n";
  if (in.analysis) {
    coverage_line("test set", in.analysis->coverage, in.analysis->runs.size());
  } else {
    os << "(not available)\n";
  }
  os << "\n== Polarity-contrast subset coverage ==\n";
  if (in.analysis && in.analysis->polarity_subset) {
    coverage_line("polarity contrast + NS", in.analysis->polarity_coverage, in.analysis->runs.size());
  } else {
    os << "(not available)\n";
  }
  return os.str();
}

void emit_report(const ReportInputs& in, const std::filesystem::path& out_dir) {
  io::ArtifactSet files;
  files.add("report.json", report_json(in).dump(2) + "\n");
  files.add("report.txt", report_text(in));
  files.commit(out_dir);
}

}  // namespace sarc
