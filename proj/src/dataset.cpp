// SPDX-License-Identifier: Apache-2.0
#include "sarc/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "sarc/errors.hpp"
#include "sarc/io.hpp"
#include "sarc/random.hpp"

namespace sarc {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(FineLabel label) {
  switch (label) {
    case FineLabel::polarity_contrast: return "polarity_contrast";
    case FineLabel::situational: return "situational";
    case FineLabel::other_irony: return "other_irony";
    case FineLabel::none: return "none";
  }
  return "none";
}

std::optional<FineLabel> parse_fine_label(std::string_view name) {
  for (auto label : all_fine_labels()) {
    if (to_string(label) == name) return label;
  }
  return std::nullopt;
}

const std::vector<FineLabel>& all_fine_labels() {
  static const std::vector<FineLabel> labels = {FineLabel::polarity_contrast, FineLabel::situational,
                                                FineLabel::other_irony, FineLabel::none};
  return labels;
}

std::string_view to_string(Violation::Kind kind) {
  switch (kind) {
    case Violation::Kind::shape: return "shape";
    case Violation::Kind::non_finite: return "non_finite";
    case Violation::Kind::label: return "label";
    case Violation::Kind::comet_count: return "comet_count";
    case Violation::Kind::empty_comet: return "empty_comet";
    case Violation::Kind::duplicate_id: return "duplicate_id";
    case Violation::Kind::header: return "header";
  }
  return "unknown";
}

std::string format_violation(const Violation& v) {
  std::ostringstream os;
  os << to_string(v.kind);
  if (!v.instance_id.empty()) os << " [" << v.instance_id << "]";
  if (v.row) os << " row " << *v.row;
  if (v.col) os << " col " << *v.col;
  os << ": " << v.message;
  return os.str();
}

namespace {

std::string describe(const std::vector<Violation>& violations) {
  std::ostringstream os;
  os << violations.size() << " dataset violation(s)";
  const std::size_t shown = std::min<std::size_t>(violations.size(), 10);
  for (std::size_t i = 0; i < shown; ++i) os << "\n  " << format_violation(violations[i]);
  if (shown < violations.size()) os << "\n  ...";
  return os.str();
}

Instance parse_instance(const json& j, std::size_t index) {
  const std::string where = "manifest instance #" + std::to_string(index);
  if (!j.is_object()) throw DataError(where + " is not an object");
  Instance inst;
  if (!j.contains("id") || !j["id"].is_string()) throw DataError(where + ": missing string field 'id'");
  inst.id = j["id"].get<std::string>();
  const std::string named = where + " (id '" + inst.id + "')";
  if (!j.contains("text") || !j["text"].is_string()) throw DataError(named + ": missing string field 'text'");
  inst.text = j["text"].get<std::string>();
  if (!j.contains("label") || !j["label"].is_number_integer()) {
    throw DataError(named + ": 'label' must be the integer 0 or 1");
  }
  inst.label = j["label"].get<int>();
  if (j.contains("fine_label")) {
    if (!j["fine_label"].is_string()) throw DataError(named + ": 'fine_label' must be a string");
    auto name = j["fine_label"].get<std::string>();
    inst.fine_label = parse_fine_label(name);
    if (!inst.fine_label) throw DataError(named + ": unknown fine_label '" + name + "'");
  }
  if (!j.contains("comet") || !j["comet"].is_array()) throw DataError(named + ": missing array field 'comet'");
  for (const auto& c : j["comet"]) {
    if (!c.is_string()) throw DataError(named + ": 'comet' entries must be strings");
    inst.comet_texts.push_back(c.get<std::string>());
  }
  return inst;
}

}  // namespace

Dataset load_dataset(const fs::path& dir, const LoadOptions& options) {
  const fs::path manifest_path = dir / kManifestFile;
  const fs::path embeddings_path = dir / kEmbeddingsFile;
  if (!fs::is_regular_file(manifest_path)) throw DataError("missing " + manifest_path.string());
  if (!fs::is_regular_file(embeddings_path)) throw DataError("missing " + embeddings_path.string());

  json manifest;
  try {
    manifest = json::parse(io::read_text(manifest_path));
  } catch (const json::parse_error& e) {
    throw DataError("malformed " + manifest_path.string() + " at byte " + std::to_string(e.byte) + ": " + e.what());
  }

  const auto require_count = [&](const char* key) -> std::size_t {
    if (!manifest.contains(key) || !manifest[key].is_number_unsigned() || manifest[key].get<std::int64_t>() <= 0) {
      throw DataError(manifest_path.string() + ": '" + key + "' must be a positive integer");
    }
    return manifest[key].get<std::size_t>();
  };
  if (!manifest.is_object()) throw DataError(manifest_path.string() + ": top level must be an object");
  if (manifest.value("version", -1) != kManifestVersion) {
    throw DataError(manifest_path.string() + ": unsupported manifest version (expected 1)");
  }

  Dataset d;
  d.dim = require_count("dim");
  d.num_comet = require_count("num_comet");
  if (!manifest.contains("relations") || !manifest["relations"].is_array()) {
    throw DataError(manifest_path.string() + ": missing array 'relations'");
  }
  for (const auto& r : manifest["relations"]) {
    if (!r.is_string()) throw DataError(manifest_path.string() + ": relation names must be strings");
    d.relations.push_back(r.get<std::string>());
  }
  if (!manifest.contains("instances") || !manifest["instances"].is_array()) {
    throw DataError(manifest_path.string() + ": missing array 'instances'");
  }
  const auto& items = manifest["instances"];
  d.instances.reserve(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) d.instances.push_back(parse_instance(items[i], i));

  const std::size_t rows_per = d.num_comet + 1;
  const std::size_t floats_per = rows_per * d.dim;
  const std::uintmax_t expected = static_cast<std::uintmax_t>(d.instances.size()) * floats_per * 4;
  const std::uintmax_t actual = fs::file_size(embeddings_path);
  if (actual != expected) {
    throw DataError("size mismatch in " + embeddings_path.string() + ": expected " + std::to_string(expected) +
                    " bytes (" + std::to_string(d.instances.size()) + " instances x " + std::to_string(rows_per) +
                    " rows x " + std::to_string(d.dim) + " dims x 4), found " + std::to_string(actual));
  }

  const auto bytes = io::read_file(embeddings_path);
  for (std::size_t i = 0; i < d.instances.size(); ++i) {
    auto& inst = d.instances[i];
    inst.embeddings = Matrix<float>(rows_per, d.dim);
    auto values = inst.embeddings.values();
    const std::size_t base = i * floats_per * 4;
    for (std::size_t k = 0; k < floats_per; ++k) {
      values[k] = io::read_f32_le(bytes.data() + base + 4 * k);
      if (options.validate && !std::isfinite(values[k])) {
        throw DataError("non-finite value in " + embeddings_path.string() + " at byte offset " +
                        std::to_string(base + 4 * k) + " (instance '" + inst.id + "', row " +
                        std::to_string(k / d.dim) + ", col " + std::to_string(k % d.dim) + ")");
      }
    }
  }

  if (options.validate) {
    auto violations = validate_dataset(d);
    if (!violations.empty()) throw DataError(dir.string() + ": " + describe(violations));
  }
  return d;
}

std::string manifest_json(const Dataset& d) {
  json instances = json::array();
  for (const auto& inst : d.instances) {
    json j = {{"id", inst.id}, {"text", inst.text}, {"label", inst.label}, {"comet", inst.comet_texts}};
    if (inst.fine_label) j["fine_label"] = std::string(to_string(*inst.fine_label));
    instances.push_back(std::move(j));
  }
  json manifest = {{"version", kManifestVersion},
                   {"dim", d.dim},
                   {"num_comet", d.num_comet},
                   {"relations", d.relations},
                   {"instances", std::move(instances)}};
  return manifest.dump(2) + "\n";
}

std::vector<char> embeddings_bytes(const Dataset& d) {
  std::vector<char> out;
  out.reserve(d.instances.size() * (d.num_comet + 1) * d.dim * 4);
  for (const auto& inst : d.instances) {
    if (inst.embeddings.rows() != d.num_comet + 1 || inst.embeddings.cols() != d.dim) {
      throw DataError("instance '" + inst.id + "' embeddings are " + std::to_string(inst.embeddings.rows()) + "x" +
                      std::to_string(inst.embeddings.cols()) + ", expected " + std::to_string(d.num_comet + 1) +
                      "x" + std::to_string(d.dim));
    }
    for (float v : inst.embeddings.values()) io::append_f32_le(out, v);
  }
  return out;
}

void write_dataset(const Dataset& d, const fs::path& dir) {
  io::ArtifactSet files;
  files.add(std::string(kEmbeddingsFile), embeddings_bytes(d));
  files.add(std::string(kManifestFile), manifest_json(d));
  files.commit(dir);
}

std::vector<Violation> validate_dataset(const Dataset& d) {
  std::vector<Violation> out;
  using K = Violation::Kind;
  if (d.dim == 0) out.push_back({K::header, "", {}, {}, "dim must be positive"});
  if (d.num_comet == 0) out.push_back({K::header, "", {}, {}, "num_comet must be positive"});
  if (d.relations.size() != d.num_comet) {
    out.push_back({K::header, "", {}, {},
                   "relations lists " + std::to_string(d.relations.size()) + " names for num_comet " +
                       std::to_string(d.num_comet)});
  }

  std::unordered_set<std::string> seen;
  for (const auto& inst : d.instances) {
    if (!seen.insert(inst.id).second) out.push_back({K::duplicate_id, inst.id, {}, {}, "duplicate instance id"});
    if (inst.label != kNonSarcastic && inst.label != kSarcastic) {
      out.push_back({K::label, inst.id, {}, {}, "label " + std::to_string(inst.label) + " is not 0 or 1"});
    }
    if (inst.comet_texts.size() != d.num_comet) {
      out.push_back({K::comet_count, inst.id, {}, {},
                     std::to_string(inst.comet_texts.size()) + " comet texts, expected " +
                         std::to_string(d.num_comet)});
    }
    for (std::size_t k = 0; k < inst.comet_texts.size(); ++k) {
      if (inst.comet_texts[k].empty()) out.push_back({K::empty_comet, inst.id, k + 1, {}, "empty comet text"});
    }
    const auto& e = inst.embeddings;
    if (e.rows() != d.num_comet + 1 || e.cols() != d.dim) {
      out.push_back({K::shape, inst.id, {}, {},
                     "embeddings are " + std::to_string(e.rows()) + "x" + std::to_string(e.cols()) +
                         ", expected " + std::to_string(d.num_comet + 1) + "x" + std::to_string(d.dim)});
    }
    for (std::size_t r = 0; r < e.rows(); ++r) {
      for (std::size_t c = 0; c < e.cols(); ++c) {
        if (!std::isfinite(e(r, c))) out.push_back({K::non_finite, inst.id, r, c, "non-finite feature"});
      }
    }
  }
  return out;
}

std::size_t split_train_size(double train_fraction, std::size_t size) {
  return static_cast<std::size_t>(std::round(train_fraction * static_cast<double>(size)));
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& d, const SplitSpec& spec) {
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
    throw UsageError("train_fraction must lie strictly between 0 and 1, got " + std::to_string(spec.train_fraction));
  }
  if (d.size() < 2) throw UsageError("cannot split a dataset with fewer than 2 instances");
  const std::size_t n_train = split_train_size(spec.train_fraction, d.size());
  if (n_train == 0 || n_train == d.size()) {
    throw UsageError("train_fraction " + std::to_string(spec.train_fraction) + " leaves an empty side for " +
                     std::to_string(d.size()) + " instances; choose a different fraction");
  }

  std::vector<std::size_t> order(d.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(spec.seed);
  rng.shuffle(std::span<std::size_t>(order));
  std::vector<bool> in_train(d.size(), false);
  for (std::size_t k = 0; k < n_train; ++k) in_train[order[k]] = true;

  Dataset train = d.like();
  Dataset test = d.like();
  train.instances.reserve(n_train);
  test.instances.reserve(d.size() - n_train);
  for (std::size_t i = 0; i < d.size(); ++i) (in_train[i] ? train : test).instances.push_back(d.instances[i]);
  return {std::move(train), std::move(test)};
}

Dataset filter_fine_label(const Dataset& d, const std::set<FineLabel>& allowed, bool keep_nonsarcastic) {
  const bool any_annotated =
      std::any_of(d.instances.begin(), d.instances.end(), [](const Instance& i) { return i.fine_label.has_value(); });
  if (!allowed.empty() && !any_annotated) {
    throw DataError(
        "no instance carries a fine_label; filtering by irony category needs the SemEval secondary-task "
        "annotation in the manifest");
  }
  Dataset out = d.like();
  for (const auto& inst : d.instances) {
    const bool keep = inst.label == kNonSarcastic
                          ? keep_nonsarcastic
                          : inst.fine_label.has_value() && allowed.contains(*inst.fine_label);
    if (keep) out.instances.push_back(inst);
  }
  return out;
}

Dataset select_ids(const Dataset& d, const std::vector<std::string>& ids) {
  std::unordered_map<std::string_view, std::size_t> index;
  for (std::size_t i = 0; i < d.size(); ++i) index.emplace(d.instances[i].id, i);
  Dataset out = d.like();
  out.instances.reserve(ids.size());
  for (const auto& id : ids) {
    auto it = index.find(id);
    if (it == index.end()) throw DataError("instance id '" + id + "' not found in dataset");
    out.instances.push_back(d.instances[it->second]);
  }
  return out;
}

}  // namespace sarc
