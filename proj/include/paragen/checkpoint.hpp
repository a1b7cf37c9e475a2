// Copyright (c) 2026 paragen contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>

#include "paragen/model.hpp"

namespace paragen {

// A saved model: JSON manifest at <stem>.json describing kind, config, vocab
// and tensor layout, with the raw float64 payload at <stem>.bin. Both files
// are byte-deterministic for identical inputs, so checkpoints can be compared
// with plain file equality.
struct Checkpoint {
  int format_version = 1;
  ModelKind kind = ModelKind::hierarchical;
  ModelConfig config;
  std::vector<std::string> vocab_tokens;
  ParamSet<double> params;
  std::uint64_t seed = 0;  // seed the run was started with
  long step = 0;           // optimizer steps taken

  Vocabulary vocab() const { return Vocabulary(vocab_tokens); }
};

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& stem);

// Validates version, magic, tensor layout against the config, payload size
// and finiteness. Throws IoError with the offending detail.
Checkpoint load_checkpoint(const std::filesystem::path& stem);

// Guard for consumers that need a specific layout.
void require_kind(const Checkpoint& ckpt, ModelKind expected);

ModelConfig model_config_from_json_text(const std::string& text);
std::string model_config_to_json_text(const ModelConfig& cfg);

}  // namespace paragen
