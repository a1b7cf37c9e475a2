// Copyright (c) 2026 paragen contributors
// SPDX-License-Identifier: Apache-2.0

#include "paragen/checkpoint.hpp"

#include <json.hpp>

#include <cstring>
#include <fstream>

namespace paragen {

namespace {

constexpr char kMagic[4] = {'P', 'C', 'K', 'P'};
constexpr std::uint32_t kPayloadVersion = 1;

using nlohmann::json;

json config_to_json(const ModelConfig& c) {
  return json{{"region_dim", c.region_dim},
              {"pool_dim", c.pool_dim},
              {"hidden_dim", c.hidden_dim},
              {"embed_dim", c.embed_dim},
              {"vocab_size", c.vocab_size},
              {"max_sentences", c.max_sentences},
              {"max_words", c.max_words},
              {"stop_threshold", c.stop_threshold},
              {"lambda_sentence", c.lambda_sentence},
              {"lambda_word", c.lambda_word}};
}

ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  c.region_dim = j.at("region_dim").get<int>();
  c.pool_dim = j.at("pool_dim").get<int>();
  c.hidden_dim = j.at("hidden_dim").get<int>();
  c.embed_dim = j.at("embed_dim").get<int>();
  c.vocab_size = j.at("vocab_size").get<int>();
  c.max_sentences = j.at("max_sentences").get<int>();
  c.max_words = j.at("max_words").get<int>();
  c.stop_threshold = j.at("stop_threshold").get<double>();
  c.lambda_sentence = j.at("lambda_sentence").get<double>();
  c.lambda_word = j.at("lambda_word").get<double>();
  return c;
}

void write_u32(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::istream& in, const std::string& what) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw IoError("checkpoint truncated at " + what);
  return static_cast<std::uint32_t>(b[0]) | static_cast<std::uint32_t>(b[1]) << 8 |
         static_cast<std::uint32_t>(b[2]) << 16 | static_cast<std::uint32_t>(b[3]) << 24;
}

}  // namespace

ModelConfig model_config_from_json_text(const std::string& text) {
  try {
    return config_from_json(json::parse(text));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("model config: ") + e.what());
  }
}

std::string model_config_to_json_text(const ModelConfig& cfg) {
  return config_to_json(cfg).dump(2);
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& stem) {
  ckpt.config.validate();
  if (!ckpt.params.all_finite()) throw IoError("save_checkpoint: non-finite parameters");
  const auto expected = param_shapes(ckpt.kind, ckpt.config);
  if (expected.size() != ckpt.params.size())
    throw IoError("save_checkpoint: tensor count does not match the model kind");
  for (std::size_t i = 0; i < expected.size(); ++i) {
    const auto& [name, shape] = expected[i];
    if (ckpt.params.name(i) != name || ckpt.params.value(i).rows() != shape.first ||
        ckpt.params.value(i).cols() != shape.second)
      throw IoError("save_checkpoint: tensor " + ckpt.params.name(i) +
                    " does not match the expected layout");
  }
  if (static_cast<int>(ckpt.vocab_tokens.size()) != ckpt.config.vocab_size)
    throw IoError("save_checkpoint: vocab size " + std::to_string(ckpt.vocab_tokens.size()) +
                  " != config vocab_size " + std::to_string(ckpt.config.vocab_size));
  Vocabulary(ckpt.vocab_tokens);  // validates the reserved prefix and duplicates

  const std::filesystem::path json_path = stem.string() + ".json";
  const std::filesystem::path bin_path = stem.string() + ".bin";

  json manifest;
  manifest["format_version"] = ckpt.format_version;
  manifest["model_kind"] = to_string(ckpt.kind);
  manifest["config"] = config_to_json(ckpt.config);
  manifest["vocab"] = ckpt.vocab_tokens;
  manifest["seed"] = ckpt.seed;
  manifest["step"] = ckpt.step;
  manifest["payload"] = bin_path.filename().string();
  json tensors = json::array();
  std::uint64_t offset = 0;
  for (std::size_t i = 0; i < ckpt.params.size(); ++i) {
    const Mat<double>& v = ckpt.params.value(i);
    json t;
    t["name"] = ckpt.params.name(i);
    t["rows"] = v.rows();
    t["cols"] = v.cols();
    t["offset"] = offset;
    tensors.push_back(t);
    offset += static_cast<std::uint64_t>(v.size()) * 8;
  }
  manifest["tensors"] = tensors;

  std::ofstream jf(json_path, std::ios::trunc);
  if (!jf) throw IoError("cannot open " + json_path.string() + " for writing");
  jf << manifest.dump(2) << "\n";
  if (!jf) throw IoError("short write to " + json_path.string());
  jf.close();

  std::ofstream bf(bin_path, std::ios::binary | std::ios::trunc);
  if (!bf) throw IoError("cannot open " + bin_path.string() + " for writing");
  bf.write(kMagic, 4);
  write_u32(bf, kPayloadVersion);
  static_assert(sizeof(double) == 8);
  std::vector<double> row;
  for (std::size_t i = 0; i < ckpt.params.size(); ++i) {
    const Mat<double>& v = ckpt.params.value(i);
    row.resize(static_cast<std::size_t>(v.cols()));
    for (Index r = 0; r < v.rows(); ++r) {
      for (Index c = 0; c < v.cols(); ++c) row[static_cast<std::size_t>(c)] = v(r, c);
      bf.write(reinterpret_cast<const char*>(row.data()),
               static_cast<std::streamsize>(8 * row.size()));
    }
  }
  if (!bf) throw IoError("short write to " + bin_path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& stem) {
  const std::filesystem::path json_path = stem.string() + ".json";
  std::ifstream jf(json_path);
  if (!jf) throw IoError("cannot open checkpoint manifest " + json_path.string());
  json manifest;
  try {
    jf >> manifest;
  } catch (const json::exception& e) {
    throw IoError(json_path.string() + ": bad JSON: " + e.what());
  }

  Checkpoint ckpt;
  try {
    ckpt.format_version = manifest.at("format_version").get<int>();
    if (ckpt.format_version != 1)
      throw IoError("unsupported checkpoint format_version " +
                    std::to_string(ckpt.format_version));
    ckpt.kind = model_kind_from_string(manifest.at("model_kind").get<std::string>());
    ckpt.config = config_from_json(manifest.at("config"));
    ckpt.vocab_tokens = manifest.at("vocab").get<std::vector<std::string>>();
    ckpt.seed = manifest.at("seed").get<std::uint64_t>();
    ckpt.step = manifest.at("step").get<long>();
  } catch (const json::exception& e) {
    throw IoError(json_path.string() + ": " + e.what());
  }
  ckpt.config.validate();
  if (static_cast<int>(ckpt.vocab_tokens.size()) != ckpt.config.vocab_size)
    throw IoError(json_path.string() + ": vocab has " + std::to_string(ckpt.vocab_tokens.size()) +
                  " entries but config says " + std::to_string(ckpt.config.vocab_size));
  Vocabulary(ckpt.vocab_tokens);

  const auto expected = param_shapes(ckpt.kind, ckpt.config);
  const json& tensors = manifest.at("tensors");
  if (tensors.size() != expected.size())
    throw IoError(json_path.string() + ": expected " + std::to_string(expected.size()) +
                  " tensors, manifest lists " + std::to_string(tensors.size()));

  const std::filesystem::path bin_path =
      stem.parent_path() / manifest.at("payload").get<std::string>();
  std::ifstream bf(bin_path, std::ios::binary);
  if (!bf) throw IoError("cannot open checkpoint payload " + bin_path.string());
  char magic[4];
  if (!bf.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
    throw IoError("bad magic in checkpoint payload " + bin_path.string());
  const std::uint32_t version = read_u32(bf, "payload version");
  if (version != kPayloadVersion)
    throw IoError("unsupported checkpoint payload version " + std::to_string(version));

  std::uint64_t offset = 0;
  std::vector<double> row;
  for (std::size_t i = 0; i < expected.size(); ++i) {
    const auto& [name, shape] = expected[i];
    const json& t = tensors[i];
    if (t.at("name").get<std::string>() != name)
      throw IoError(json_path.string() + ": tensor " + std::to_string(i) + " is " +
                    t.at("name").get<std::string>() + ", expected " + name);
    const auto rows = t.at("rows").get<Index>();
    const auto cols = t.at("cols").get<Index>();
    if (rows != shape.first || cols != shape.second)
      throw IoError(json_path.string() + ": tensor " + name + " is " + std::to_string(rows) +
                    "x" + std::to_string(cols) + ", expected " + std::to_string(shape.first) +
                    "x" + std::to_string(shape.second));
    if (t.at("offset").get<std::uint64_t>() != offset)
      throw IoError(json_path.string() + ": tensor " + name + " offset mismatch");
    Mat<double> v(rows, cols);
    row.resize(static_cast<std::size_t>(cols));
    for (Index r = 0; r < rows; ++r) {
      if (!bf.read(reinterpret_cast<char*>(row.data()),
                   static_cast<std::streamsize>(8 * row.size())))
        throw IoError(bin_path.string() + ": truncated in tensor " + name);
      for (Index c = 0; c < cols; ++c) v(r, c) = row[static_cast<std::size_t>(c)];
    }
    offset += static_cast<std::uint64_t>(v.size()) * 8;
    ckpt.params.add(name, std::move(v));
  }
  char extra;
  if (bf.read(&extra, 1)) throw IoError(bin_path.string() + ": trailing bytes after tensors");
  if (!ckpt.params.all_finite())
    throw IoError(bin_path.string() + ": non-finite parameter values");
  return ckpt;
}

void require_kind(const Checkpoint& ckpt, ModelKind expected) {
  if (ckpt.kind != expected)
    throw Error("checkpoint holds a " + to_string(ckpt.kind) + " model, expected " +
                to_string(expected));
}

}  // namespace paragen
