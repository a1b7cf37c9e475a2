// Copyright (c) 2026 paragen contributors
// SPDX-License-Identifier: Apache-2.0

#include "paragen/dataset.hpp"

#include <json.hpp>

#include <cstdint>
#include <cstring>
#include <fstream>

#include "paragen/errors.hpp"

namespace paragen {

namespace {

constexpr char kMagic[4] = {'R', 'G', 'N', 'F'};
constexpr std::uint32_t kVersion = 1;

std::uint32_t read_u32(std::istream& in, const std::string& what) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw IoError("feature file truncated at " + what);
  return static_cast<std::uint32_t>(b[0]) | static_cast<std::uint32_t>(b[1]) << 8 |
         static_cast<std::uint32_t>(b[2]) << 16 | static_cast<std::uint32_t>(b[3]) << 24;
}

void write_u32(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

}  // namespace

Eigen::MatrixXf read_feature_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open feature file " + path.string());
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
    throw IoError("bad magic in feature file " + path.string());
  const std::uint32_t version = read_u32(in, "version");
  if (version != kVersion)
    throw IoError("unsupported feature file version " + std::to_string(version) + " in " +
                  path.string());
  const std::uint32_t rows = read_u32(in, "row count");
  const std::uint32_t cols = read_u32(in, "column count");
  if (rows == 0 || cols == 0)
    throw IoError("feature file " + path.string() + " declares empty matrix " +
                  std::to_string(rows) + "x" + std::to_string(cols));
  // Row-major on disk; filled per coefficient, so the in-memory layout does
  // not matter. Floats are IEEE little endian, which is also the host format
  // on every platform this builds for.
  static_assert(sizeof(float) == 4);
  Eigen::MatrixXf m(rows, cols);
  std::vector<float> row(cols);
  for (std::uint32_t r = 0; r < rows; ++r) {
    if (!in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(4 * cols)))
      throw IoError("feature file " + path.string() + " truncated at row " + std::to_string(r));
    for (std::uint32_t c = 0; c < cols; ++c) m(r, c) = row[c];
  }
  char extra;
  if (in.read(&extra, 1))
    throw IoError("feature file " + path.string() + " has trailing bytes");
  if (!m.allFinite()) throw IoError("feature file " + path.string() + " has non-finite values");
  return m;
}

void write_feature_file(const std::filesystem::path& path, const Eigen::MatrixXf& features) {
  if (features.rows() < 1 || features.cols() < 1)
    throw IoError("refusing to write empty feature matrix to " + path.string());
  if (!features.allFinite())
    throw IoError("refusing to write non-finite features to " + path.string());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(kMagic, 4);
  write_u32(out, kVersion);
  write_u32(out, static_cast<std::uint32_t>(features.rows()));
  write_u32(out, static_cast<std::uint32_t>(features.cols()));
  std::vector<float> row(static_cast<std::size_t>(features.cols()));
  for (Eigen::Index r = 0; r < features.rows(); ++r) {
    for (Eigen::Index c = 0; c < features.cols(); ++c)
      row[static_cast<std::size_t>(c)] = features(r, c);
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(4 * row.size()));
  }
  if (!out) throw IoError("short write to " + path.string());
}

std::vector<DatasetRecord> load_dataset(const std::filesystem::path& manifest,
                                        bool load_features) {
  std::ifstream in(manifest);
  if (!in) throw IoError("cannot open manifest " + manifest.string());
  const std::filesystem::path base = manifest.parent_path();

  std::vector<DatasetRecord> records;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string where = manifest.string() + ":" + std::to_string(lineno);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw IoError(where + ": bad JSON: " + e.what());
    }
    DatasetRecord rec;
    try {
      rec.id = j.at("id").get<std::string>();
      rec.split = j.at("split").get<std::string>();
      rec.feature_path = j.at("features").get<std::string>();
      rec.paragraph_text = j.at("paragraph").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw IoError(where + ": " + e.what());
    }
    if (rec.split != "train" && rec.split != "val" && rec.split != "test")
      throw IoError(where + ": unknown split " + rec.split);
    try {
      rec.paragraph = tokenize(rec.paragraph_text);
    } catch (const Error& e) {
      throw IoError(where + " (record " + rec.id + "): " + e.what());
    }
    std::filesystem::path fpath(rec.feature_path);
    if (fpath.is_relative()) fpath = base / fpath;
    rec.feature_path = fpath.string();
    if (load_features) {
      try {
        rec.features = read_feature_file(fpath);
      } catch (const Error& e) {
        throw IoError(where + " (record " + rec.id + "): " + e.what());
      }
    }
    records.push_back(std::move(rec));
  }
  return records;
}

void write_manifest(const std::filesystem::path& path,
                    const std::vector<DatasetRecord>& records) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  for (const DatasetRecord& rec : records) {
    nlohmann::json j;
    j["id"] = rec.id;
    j["split"] = rec.split;
    j["features"] = rec.feature_path;
    j["paragraph"] = rec.paragraph_text;
    out << j.dump() << "\n";
  }
  if (!out) throw IoError("short write to " + path.string());
}

}  // namespace paragen
