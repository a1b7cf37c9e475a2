// Copyright (c) 2026 paragen contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "paragen/dataset.hpp"

namespace paragen {

// A nameable thing that can appear in a scene, with sentence templates that
// all mention its name.
struct ObjectClass {
  std::string name;
  std::vector<std::string> templates;
};

struct SynthConfig {
  int num_types = 6;       // object classes in play (capped by the bank size)
  int feature_dim = 64;    // columns of each feature matrix
  double feature_noise = 0.05;
  double prototype_scale = 1.0;
  int objects_min = 1;
  int objects_max = 4;
  int distractors_min = 0;  // pure-noise regions appended after the objects
  int distractors_max = 2;
  int train_count = 500;
  int val_count = 100;
  int test_count = 100;
  std::uint64_t seed = 1;

  void validate() const;
};

// Built-in class bank; the first `k` entries of it back a SynthConfig.
const std::vector<ObjectClass>& object_class_bank();

// Draws scenes: each picks 1..objects_max distinct classes, emits one
// template sentence per class, and builds one feature row per class from that
// class's block prototype plus Gaussian noise, followed by pure-noise
// distractor rows. Classes are kept in ascending bank order, so sentence i
// describes feature row i. Deterministic in the seed; features are stored as
// float32, so a round trip through disk is exact.
std::vector<DatasetRecord> synth_generate(const SynthConfig& cfg);

// Lays out a dataset directory: train.jsonl, val.jsonl, test.jsonl and a
// features/ subdirectory with one file per record.
void write_synth_dataset(const std::vector<DatasetRecord>& records,
                         const std::filesystem::path& out_dir);

}  // namespace paragen
