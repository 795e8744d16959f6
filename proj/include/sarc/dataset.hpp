// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sarc/matrix.hpp"

namespace sarc {

enum class FineLabel { polarity_contrast, situational, other_irony, none };

std::string_view to_string(FineLabel label);
std::optional<FineLabel> parse_fine_label(std::string_view name);
const std::vector<FineLabel>& all_fine_labels();

inline constexpr int kNonSarcastic = 0;
inline constexpr int kSarcastic = 1;

// One labeled sentence with its commonsense completions. Row 0 of
// `embeddings` is the sentence itself; rows 1..M follow the dataset's
// relation order.
struct Instance {
  std::string id;
  std::string text;
  int label = kNonSarcastic;
  std::optional<FineLabel> fine_label;
  std::vector<std::string> comet_texts;
  Matrix<float> embeddings;

  bool operator==(const Instance&) const = default;
};

struct Dataset {
  std::vector<Instance> instances;
  std::size_t dim = 0;
  std::size_t num_comet = 0;
  std::vector<std::string> relations;

  std::size_t size() const { return instances.size(); }
  bool empty() const { return instances.empty(); }

  // Same header, no instances.
  Dataset like() const { return Dataset{{}, dim, num_comet, relations}; }

  bool operator==(const Dataset&) const = default;
};

struct SplitSpec {
  double train_fraction = 0.8;
  std::uint64_t seed = 0;
};

struct Violation {
  enum class Kind { shape, non_finite, label, comet_count, empty_comet, duplicate_id, header };
  Kind kind;
  std::string instance_id;  // empty for dataset-level violations
  std::optional<std::size_t> row;
  std::optional<std::size_t> col;
  std::string message;
};

std::string_view to_string(Violation::Kind kind);
std::string format_violation(const Violation& v);

struct LoadOptions {
  // When set, invariant violations (duplicate ids, NaNs, ...) raise DataError.
  // The `validate` command clears it so it can print the full report.
  bool validate = true;
};

inline constexpr std::string_view kManifestFile = "manifest.json";
inline constexpr std::string_view kEmbeddingsFile = "embeddings.f32";
inline constexpr int kManifestVersion = 1;

Dataset load_dataset(const std::filesystem::path& dir, const LoadOptions& options = {});

// Writes manifest.json + embeddings.f32. Files are staged and renamed into place.
void write_dataset(const Dataset& d, const std::filesystem::path& dir);

std::string manifest_json(const Dataset& d);
std::vector<char> embeddings_bytes(const Dataset& d);

std::vector<Violation> validate_dataset(const Dataset& d);

// Round half away from zero of fraction * size.
std::size_t split_train_size(double train_fraction, std::size_t size);

// Deterministic partition. Both sides keep the source order.
std::pair<Dataset, Dataset> split_dataset(const Dataset& d, const SplitSpec& spec);

Dataset filter_fine_label(const Dataset& d, const std::set<FineLabel>& allowed,
                          bool keep_nonsarcastic);

// Sub-dataset holding the given ids, in the order of `ids`. Unknown ids raise DataError.
Dataset select_ids(const Dataset& d, const std::vector<std::string>& ids);

}  // namespace sarc
