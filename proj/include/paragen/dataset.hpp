// Copyright (c) 2026 paragen contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <string>
#include <vector>

#include "paragen/tokenizer.hpp"

namespace paragen {

// One image: a stack of region feature vectors (row per region, ordered by
// detection score) and its ground-truth paragraph.
struct DatasetRecord {
  std::string id;
  std::string split;  // train, val or test
  std::string feature_path;
  Eigen::MatrixXf features;  // regions x feature dim; empty until loaded
  std::string paragraph_text;
  TokenizedParagraph paragraph;
};

// Region feature container: magic "RGNF", u32 version 1, u32 row count,
// u32 column count, then row-major float32, all little endian.
Eigen::MatrixXf read_feature_file(const std::filesystem::path& path);
void write_feature_file(const std::filesystem::path& path, const Eigen::MatrixXf& features);

// Reads a JSONL manifest. Each line holds id, split, features (path relative
// to the manifest unless absolute) and paragraph. Paragraphs are tokenized
// here; feature files are loaded unless load_features is false. Errors name
// the offending line or record.
std::vector<DatasetRecord> load_dataset(const std::filesystem::path& manifest,
                                        bool load_features = true);

// Writes the manifest lines for `records` (not the feature files).
void write_manifest(const std::filesystem::path& path, const std::vector<DatasetRecord>& records);

}  // namespace paragen
