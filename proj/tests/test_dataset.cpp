// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>

#include <json.hpp>

#include "sarc/ablation.hpp"
#include "sarc/dataset.hpp"
#include "sarc/errors.hpp"
#include "sarc/io.hpp"

using namespace sarc;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::path(SARC_TEST_TMP) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

Instance make_instance(std::string id, int label, std::optional<FineLabel> fine, std::size_t m, std::size_t d,
                       float base) {
  Instance inst;
  inst.id = std::move(id);
  inst.text = "text of " + inst.id;
  inst.label = label;
  inst.fine_label = fine;
  for (std::size_t r = 0; r < m; ++r) inst.comet_texts.push_back("PersonX wanted thing " + std::to_string(r));
  inst.embeddings = Matrix<float>(m + 1, d);
  for (std::size_t r = 0; r <= m; ++r) {
    for (std::size_t c = 0; c < d; ++c) inst.embeddings(r, c) = base + 0.25f * static_cast<float>(r * d + c);
  }
  return inst;
}

Dataset small_dataset(std::size_t n = 2, std::size_t m = 2, std::size_t d = 4) {
  Dataset ds;
  ds.dim = d;
  ds.num_comet = m;
  ds.relations = {"xWant", "xEffect"};
  ds.relations.resize(m, "rel");
  for (std::size_t i = 0; i < n; ++i) {
    ds.instances.push_back(make_instance("i" + std::to_string(i), static_cast<int>(i % 2), std::nullopt, m, d,
                                         static_cast<float>(i)));
  }
  return ds;
}

std::vector<std::string> ids_of(const Dataset& d) {
  std::vector<std::string> out;
  for (const auto& i : d.instances) out.push_back(i.id);
  return out;
}

void write_bytes(const fs::path& p, const std::vector<char>& bytes) {
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST_CASE("fine label names round-trip") {
  for (FineLabel f : all_fine_labels()) CHECK(parse_fine_label(to_string(f)) == f);
  CHECK(all_fine_labels().size() == 4);
  CHECK_FALSE(parse_fine_label("sarcasm").has_value());
}

TEST_CASE("little-endian binary32 encoding") {
  std::vector<char> out;
  io::append_f32_le(out, 1.0f);
  REQUIRE(out.size() == 4);
  CHECK(static_cast<unsigned char>(out[0]) == 0x00);
  CHECK(static_cast<unsigned char>(out[2]) == 0x80);
  CHECK(static_cast<unsigned char>(out[3]) == 0x3f);
  CHECK(io::read_f32_le(out.data()) == 1.0f);
  out.clear();
  io::append_f32_le(out, -0.0f);
  CHECK(std::signbit(io::read_f32_le(out.data())));
}

TEST_CASE("well-formed directory loads with M+1 rows per instance") {
  const fs::path dir = scratch("load_ok");
  const Dataset d = small_dataset(2, 2, 4);
  write_dataset(d, dir);
  CHECK(fs::file_size(dir / "embeddings.f32") == 2 * 3 * 4 * 4);
  const Dataset back = load_dataset(dir);
  CHECK(back.size() == 2);
  CHECK(back.dim == 4);
  CHECK(back.num_comet == 2);
  for (const auto& inst : back.instances) {
    CHECK(inst.embeddings.rows() == 3);
    CHECK(inst.embeddings.cols() == 4);
  }
  CHECK(back == d);
  CHECK(back.instances[1].embeddings(2, 3) == 1.0f + 0.25f * 11.0f);
}

TEST_CASE("write(load(p)) reproduces the files") {
  const fs::path src = scratch("roundtrip_src");
  const fs::path dst = scratch("roundtrip_dst");
  Dataset d = make_toy_dataset({30, 6, 3, 5, 0.2, 0.1});
  d.instances[0].embeddings(1, 2) = -0.0f;
  d.instances[1].embeddings(0, 0) = std::numeric_limits<float>::denorm_min();
  d.instances[2].text = "café \"quoted\" \\ tab\t";
  write_dataset(d, src);
  write_dataset(load_dataset(src), dst);
  CHECK(io::read_file(src / "embeddings.f32") == io::read_file(dst / "embeddings.f32"));
  const auto a = nlohmann::json::parse(io::read_text(src / "manifest.json"));
  const auto b = nlohmann::json::parse(io::read_text(dst / "manifest.json"));
  CHECK(a == b);
  CHECK(a.dump() == b.dump());
  CHECK(load_dataset(dst) == d);
}

TEST_CASE("manifest layout") {
  Dataset d = small_dataset(1, 2, 4);
  d.instances[0].fine_label = FineLabel::polarity_contrast;
  const auto j = nlohmann::json::parse(manifest_json(d));
  CHECK(j["version"] == 1);
  CHECK(j["dim"] == 4);
  CHECK(j["num_comet"] == 2);
  CHECK(j["relations"] == nlohmann::json::array({"xWant", "xEffect"}));
  CHECK(j["instances"][0]["fine_label"] == "polarity_contrast");
  CHECK(j["instances"][0]["comet"].size() == 2);
  d.instances[0].fine_label.reset();
  CHECK_FALSE(nlohmann::json::parse(manifest_json(d))["instances"][0].contains("fine_label"));
}

TEST_CASE("binary file truncated by 4 bytes names expected and actual sizes") {
  const fs::path dir = scratch("truncated");
  write_dataset(small_dataset(2, 2, 4), dir);
  auto bytes = io::read_file(dir / "embeddings.f32");
  bytes.resize(bytes.size() - 4);
  write_bytes(dir / "embeddings.f32", bytes);
  try {
    load_dataset(dir);
    FAIL("expected a size mismatch");
  } catch (const DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("96") != std::string::npos);
    CHECK(msg.find("92") != std::string::npos);
    CHECK(msg.find("size mismatch") != std::string::npos);
  }
}

TEST_CASE("duplicate ids are reported with the id") {
  const fs::path dir = scratch("duplicate");
  Dataset d = small_dataset(3, 2, 4);
  d.instances[2].id = "i0";
  write_dataset(d, dir);
  try {
    load_dataset(dir);
    FAIL("expected a validation error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("i0") != std::string::npos);
  }
  LoadOptions lenient;
  lenient.validate = false;
  const auto v = validate_dataset(load_dataset(dir, lenient));
  REQUIRE(v.size() == 1);
  CHECK(v[0].kind == Violation::Kind::duplicate_id);
  CHECK(v[0].instance_id == "i0");
}

TEST_CASE("non-finite float in the binary file names the byte offset and instance") {
  const fs::path dir = scratch("nan_file");
  write_dataset(small_dataset(2, 2, 4), dir);
  auto bytes = io::read_file(dir / "embeddings.f32");
  std::vector<char> nan_bytes;
  io::append_f32_le(nan_bytes, std::numeric_limits<float>::quiet_NaN());
  const std::size_t offset = (1 * 3 + 2) * 4 * 4 + 1 * 4;  // instance 1, row 2, col 1
  std::copy(nan_bytes.begin(), nan_bytes.end(), bytes.begin() + static_cast<std::ptrdiff_t>(offset));
  write_bytes(dir / "embeddings.f32", bytes);
  try {
    load_dataset(dir);
    FAIL("expected a non-finite error");
  } catch (const DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find(std::to_string(offset)) != std::string::npos);
    CHECK(msg.find("i1") != std::string::npos);
  }
}

TEST_CASE("missing files and malformed JSON are data errors") {
  const fs::path dir = scratch("malformed");
  CHECK_THROWS_AS(load_dataset(dir), DataError);
  write_dataset(small_dataset(), dir);
  io::write_file_atomic(dir / "manifest.json", std::string_view("{\"version\": 1, \"dim\": 4,,}"));
  try {
    load_dataset(dir);
    FAIL("expected a parse error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("byte") != std::string::npos);
  }
  io::write_file_atomic(dir / "manifest.json", std::string_view("{\"version\": 2}"));
  CHECK_THROWS_AS(load_dataset(dir), DataError);
  fs::remove(dir / "embeddings.f32");
  CHECK_THROWS_AS(load_dataset(dir), DataError);
}

TEST_CASE("validate_dataset reports each invariant breach") {
  CHECK(validate_dataset(small_dataset(4)).empty());

  Dataset nan = small_dataset(3);
  nan.instances[1].embeddings(2, 3) = std::numeric_limits<float>::quiet_NaN();
  auto v = validate_dataset(nan);
  REQUIRE(v.size() == 1);
  CHECK(v[0].kind == Violation::Kind::non_finite);
  CHECK(v[0].instance_id == "i1");
  CHECK(v[0].row == 2u);
  CHECK(v[0].col == 3u);

  Dataset short_comet = small_dataset(3);
  short_comet.instances[0].comet_texts.pop_back();
  v = validate_dataset(short_comet);
  REQUIRE(v.size() == 1);
  CHECK(v[0].kind == Violation::Kind::comet_count);

  Dataset empty_comet = small_dataset(2);
  empty_comet.instances[1].comet_texts[0].clear();
  v = validate_dataset(empty_comet);
  REQUIRE(v.size() == 1);
  CHECK(v[0].kind == Violation::Kind::empty_comet);

  Dataset bad_label = small_dataset(2);
  bad_label.instances[0].label = 2;
  v = validate_dataset(bad_label);
  REQUIRE(v.size() == 1);
  CHECK(v[0].kind == Violation::Kind::label);

  Dataset bad_shape = small_dataset(2);
  bad_shape.instances[0].embeddings = Matrix<float>(2, 4);
  v = validate_dataset(bad_shape);
  REQUIRE(v.size() == 1);
  CHECK(v[0].kind == Violation::Kind::shape);
  CHECK_FALSE(format_violation(v[0]).empty());
}

TEST_CASE("split sizes round half away from zero") {
  CHECK(split_train_size(3833.0 / 4791.0, 4791) == 3833);
  CHECK(split_train_size(0.5, 5) == 3);
  CHECK(split_train_size(0.25, 6) == 2);
  CHECK(split_train_size(0.8, 10) == 8);
}

TEST_CASE("split at 3833/4791 gives 3833/958") {
  const Dataset d = make_toy_dataset({4791, 2, 1, 1, 0.0, 0.0});
  const auto [train, test] = split_dataset(d, {3833.0 / 4791.0, 42});
  CHECK(train.size() == 3833);
  CHECK(test.size() == 958);
}

TEST_CASE("split_dataset is a deterministic partition") {
  Rng rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.below(40);
    const Dataset d = small_dataset(n, 1, 2);
    double fraction = rng.uniform(0.01, 0.99);
    const std::size_t n_train = split_train_size(fraction, n);
    const std::uint64_t seed = rng.next();
    if (n_train == 0 || n_train == n) {
      CHECK_THROWS_AS(split_dataset(d, {fraction, seed}), UsageError);
      continue;
    }
    const auto [train, test] = split_dataset(d, {fraction, seed});
    CHECK(train.size() == n_train);
    CHECK(train.size() + test.size() == n);
    std::set<std::string> seen;
    for (const auto& id : ids_of(train)) CHECK(seen.insert(id).second);
    for (const auto& id : ids_of(test)) CHECK(seen.insert(id).second);
    CHECK(seen.size() == n);
    const auto [train2, test2] = split_dataset(d, {fraction, seed});
    CHECK(ids_of(train2) == ids_of(train));
    CHECK(ids_of(test2) == ids_of(test));
    // Source order is preserved on both sides.
    const auto in_order = [](const std::vector<std::string>& ids) {
      for (std::size_t i = 1; i < ids.size(); ++i) {
        if (std::stoi(ids[i - 1].substr(1)) >= std::stoi(ids[i].substr(1))) return false;
      }
      return true;
    };
    CHECK(in_order(ids_of(train)));
    CHECK(in_order(ids_of(test)));
  }
}

TEST_CASE("split with two seeds still partitions") {
  const Dataset d = small_dataset(10);
  const auto [a_train, a_test] = split_dataset(d, {0.5, 1});
  const auto [b_train, b_test] = split_dataset(d, {0.5, 2});
  CHECK(a_train.size() == 5);
  CHECK(b_train.size() == 5);
  const auto a_ids = ids_of(a_train);
  const std::set<std::string> a(a_ids.begin(), a_ids.end());
  for (const auto& id : ids_of(a_test)) CHECK_FALSE(a.contains(id));
}

TEST_CASE("split rejects bad fractions and tiny datasets") {
  const Dataset d = small_dataset(10);
  CHECK_THROWS_AS(split_dataset(d, {0.0, 1}), UsageError);
  CHECK_THROWS_AS(split_dataset(d, {1.0, 1}), UsageError);
  CHECK_THROWS_AS(split_dataset(d, {0.01, 1}), UsageError);
  CHECK_THROWS_AS(split_dataset(small_dataset(1), {0.5, 1}), UsageError);
}

TEST_CASE("filter_fine_label") {
  Dataset d = small_dataset(0);
  d.instances.push_back(make_instance("a", 1, FineLabel::polarity_contrast, 2, 4, 0));
  d.instances.push_back(make_instance("b", 1, FineLabel::situational, 2, 4, 0));
  d.instances.push_back(make_instance("c", 0, FineLabel::none, 2, 4, 0));
  d.instances.push_back(make_instance("e", 0, FineLabel::none, 2, 4, 0));

  CHECK(ids_of(filter_fine_label(d, {FineLabel::polarity_contrast}, true)) == std::vector<std::string>{"a", "c", "e"});
  CHECK(ids_of(filter_fine_label(d, {}, true)) == std::vector<std::string>{"c", "e"});
  CHECK(ids_of(filter_fine_label(d, {FineLabel::polarity_contrast}, false)) == std::vector<std::string>{"a"});
  const std::set<FineLabel> all(all_fine_labels().begin(), all_fine_labels().end());
  CHECK(filter_fine_label(d, all, true) == d);

  const Dataset unannotated = small_dataset(4);
  CHECK_THROWS_AS(filter_fine_label(unannotated, {FineLabel::polarity_contrast}, true), DataError);
  CHECK(filter_fine_label(unannotated, {}, true).size() == 2);
}

TEST_CASE("filter_fine_label(d, all, true) is the identity on toy data") {
  const Dataset d = make_toy_dataset({100, 4, 2, 3, 0.0, 0.1});
  const std::set<FineLabel> all(all_fine_labels().begin(), all_fine_labels().end());
  CHECK(filter_fine_label(d, all, true) == d);
}

TEST_CASE("select_ids keeps the requested order") {
  const Dataset d = small_dataset(5);
  CHECK(ids_of(select_ids(d, {"i3", "i0"})) == std::vector<std::string>{"i3", "i0"});
  CHECK_THROWS_AS(select_ids(d, {"nope"}), DataError);
}

TEST_CASE("shipped toy dataset is clean") {
  const Dataset d = load_dataset(fs::path(SARC_SOURCE_DIR) / "data" / "toy");
  CHECK(validate_dataset(d).empty());
  CHECK(d.size() == 200);
  CHECK(d.dim == 16);
  CHECK(d.num_comet == 2);
  // The shipped files are reproducible from the generator settings.
  const Dataset regenerated = make_toy_dataset({200, 16, 2, 11, 0.3, 0.1});
  CHECK(manifest_json(regenerated) == io::read_text(fs::path(SARC_SOURCE_DIR) / "data" / "toy" / "manifest.json"));
  CHECK(embeddings_bytes(regenerated) == io::read_file(fs::path(SARC_SOURCE_DIR) / "data" / "toy" / "embeddings.f32"));
}

TEST_CASE("artifact sets write nothing until commit") {
  const fs::path dir = scratch("artifacts");
  io::ArtifactSet files;
  files.add("a/b.txt", std::string("hello"));
  files.add("c.bin", std::vector<char>{1, 2, 3});
  CHECK(files.size() == 2);
  CHECK_FALSE(fs::exists(dir / "a" / "b.txt"));
  files.commit(dir);
  CHECK(io::read_text(dir / "a" / "b.txt") == "hello");
  CHECK(io::read_file(dir / "c.bin") == std::vector<char>{1, 2, 3});
  for (const auto& e : fs::recursive_directory_iterator(dir)) CHECK(e.path().extension() != ".tmp");
}
