// SPDX-License-Identifier: Apache-2.0
#include "sarc/checkpoint.hpp"

#include <algorithm>
#include <cmath>

#include "sarc/errors.hpp"
#include "sarc/io.hpp"

namespace sarc {

using nlohmann::json;

namespace {

constexpr const char* kFormat = "sarc-checkpoint";

std::vector<std::pair<std::string, std::pair<std::size_t, std::size_t>>> tensor_layout(const ModelParams& p) {
  std::vector<std::pair<std::string, std::pair<std::size_t, std::size_t>>> out;
  for (std::size_t k = 0; k < p.sage.size(); ++k) {
    const auto& l = p.sage[k];
    const std::string prefix = "sage." + std::to_string(k) + ".";
    out.push_back({prefix + "w_self", {l.w_self.rows(), l.w_self.cols()}});
    out.push_back({prefix + "w_neigh", {l.w_neigh.rows(), l.w_neigh.cols()}});
    out.push_back({prefix + "bias", {1, l.bias.size()}});
  }
  out.push_back({"head.w", {p.head_w.rows(), p.head_w.cols()}});
  out.push_back({"head.b", {1, p.head_b.size()}});
  out.push_back({"base.w", {p.base_w.rows(), p.base_w.cols()}});
  out.push_back({"base.b", {1, p.base_b.size()}});
  return out;
}

}  // namespace

std::vector<char> encode_checkpoint(const TrainedModel& m) {
  const bool drop = m.kind.type == ModelType::gcn && m.kind.forward.drop_input_row;
  check_shapes(m.params, drop);

  json tensors = json::array();
  std::size_t count = 0;
  for (const auto& [name, shape] : tensor_layout(m.params)) {
    tensors.push_back({{"name", name}, {"shape", {shape.first, shape.second}}});
    count += shape.first * shape.second;
  }
  json history = json::array();
  for (const auto& e : m.history) history.push_back({{"loss", e.loss}, {"accuracy", e.accuracy}});
  const auto& d = m.params.dims;
  json header = {{"format", kFormat},
                 {"version", 1},
                 {"dims", {{"input_dim", d.input_dim}, {"hidden_dim", d.hidden_dim}, {"num_comet", d.num_comet},
                           {"layers", d.layers}}},
                 {"kind", to_json(m.kind)},
                 {"hyperparams", to_json(m.hyperparams)},
                 {"seed", m.seed},
                 {"history", std::move(history)},
                 {"tensors", std::move(tensors)},
                 {"tensor_bytes", count * 4}};

  const std::string text = header.dump() + "\n";
  std::vector<char> out(text.begin(), text.end());
  out.reserve(out.size() + count * 4);
  for (auto t : m.params.tensors()) {
    for (double v : t) io::append_f32_le(out, static_cast<float>(v));
  }
  return out;
}

TrainedModel decode_checkpoint(const std::vector<char>& bytes) {
  const auto newline = std::find(bytes.begin(), bytes.end(), '\n');
  if (newline == bytes.end()) throw DataError("checkpoint has no header line");
  json header;
  try {
    header = json::parse(bytes.begin(), newline);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("malformed checkpoint header: ") + e.what());
  }
  if (header.value("format", std::string()) != kFormat || header.value("version", 0) != 1) {
    throw DataError("not a version-1 sarc checkpoint");
  }

  TrainedModel m;
  try {
    const auto& jd = header.at("dims");
    const ModelDims dims{jd.at("input_dim").get<std::size_t>(), jd.at("hidden_dim").get<std::size_t>(),
                         jd.at("num_comet").get<std::size_t>(), jd.at("layers").get<std::size_t>()};
    m.kind = model_kind_from_json(header.at("kind"));
    m.hyperparams = hyperparams_from_json(header.at("hyperparams"));
    m.seed = header.at("seed").get<std::uint64_t>();
    for (const auto& e : header.at("history")) {
      m.history.push_back({e.at("loss").get<double>(), e.at("accuracy").get<double>()});
    }
    const bool drop = m.kind.type == ModelType::gcn && m.kind.forward.drop_input_row;
    m.params = ModelParams::zeros(dims, drop);
    const auto layout = tensor_layout(m.params);
    const auto& listed = header.at("tensors");
    if (listed.size() != layout.size()) throw DataError("checkpoint tensor list does not match its dims");
    for (std::size_t t = 0; t < layout.size(); ++t) {
      const auto shape = listed[t].at("shape").get<std::vector<std::size_t>>();
      if (listed[t].at("name").get<std::string>() != layout[t].first || shape.size() != 2 ||
          shape[0] != layout[t].second.first || shape[1] != layout[t].second.second) {
        throw DataError("checkpoint tensor '" + layout[t].first + "' has an unexpected name or shape");
      }
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed checkpoint header: ") + e.what());
  }

  auto tensors = m.params.tensors();
  std::size_t count = 0;
  for (auto t : tensors) count += t.size();
  const std::size_t offset = static_cast<std::size_t>(newline - bytes.begin()) + 1;
  if (bytes.size() - offset != count * 4) {
    throw DataError("checkpoint payload is " + std::to_string(bytes.size() - offset) + " bytes, expected " +
                    std::to_string(count * 4));
  }
  const char* p = bytes.data() + offset;
  for (auto t : tensors) {
    for (double& v : t) {
      v = io::read_f32_le(p);
      if (!std::isfinite(v)) throw DataError("checkpoint contains a non-finite weight");
      p += 4;
    }
  }
  return m;
}

void save_checkpoint(const TrainedModel& m, const std::filesystem::path& path) {
  io::write_file_atomic(path, encode_checkpoint(m));
}

TrainedModel load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(io::read_file(path)); }

}  // namespace sarc
