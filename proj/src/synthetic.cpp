// Copyright (c) 2026 paragen contributors
// SPDX-License-Identifier: Apache-2.0

#include "paragen/synthetic.hpp"

#include <algorithm>
#include <cstdio>

#include "paragen/errors.hpp"
#include "paragen/rng.hpp"

namespace paragen {

void SynthConfig::validate() const {
  const auto bank = static_cast<int>(object_class_bank().size());
  if (num_types < 1 || num_types > bank)
    throw ConfigError("synth: num_types must be in [1, " + std::to_string(bank) + "]");
  if (feature_dim < num_types)
    throw ConfigError("synth: feature_dim must be >= num_types for distinct prototypes");
  if (feature_noise < 0.0) throw ConfigError("synth: feature_noise must be >= 0");
  if (prototype_scale <= 0.0) throw ConfigError("synth: prototype_scale must be > 0");
  if (objects_min < 1 || objects_max < objects_min)
    throw ConfigError("synth: need 1 <= objects_min <= objects_max");
  if (objects_max > num_types)
    throw ConfigError("synth: objects_max exceeds num_types (classes are distinct per scene)");
  if (distractors_min < 0 || distractors_max < distractors_min)
    throw ConfigError("synth: need 0 <= distractors_min <= distractors_max");
  if (train_count < 0 || val_count < 0 || test_count < 0)
    throw ConfigError("synth: split counts must be >= 0");
  if (train_count + val_count + test_count == 0)
    throw ConfigError("synth: no records requested");
}

const std::vector<ObjectClass>& object_class_bank() {
  static const std::vector<ObjectClass> kBank = {
      {"dog",
       {"a dog runs across the yard .", "the dog sits by the door .",
        "a small dog plays with a ball ."}},
      {"car",
       {"a red car is parked on the street .", "the car drives down the road .",
        "a car waits at the corner ."}},
      {"tree",
       {"a tall tree stands in the field .", "the tree has many green leaves .",
        "a tree grows near the fence ."}},
      {"house",
       {"the house has a blue roof .", "a large house sits on the hill .",
        "the house looks quiet and old ."}},
      {"bird",
       {"a bird flies over the water .", "the bird sings from a branch .",
        "a small bird pecks at the ground ."}},
      {"boat",
       {"a boat floats on the lake .", "the boat is tied to the dock .",
        "a white boat drifts slowly by ."}},
      {"cat",
       {"a cat sleeps on the steps .", "the cat watches from the window .",
        "a gray cat walks along the wall ."}},
      {"road",
       {"the road curves toward the hills .", "a long road stretches into the distance .",
        "the road is empty and wet ."}},
  };
  return kBank;
}

namespace {

// Block prototype for class t: coefficients [t*B, (t+1)*B) are hot where
// B = dim / num_types; any remainder coefficients stay zero.
Eigen::VectorXd prototype(int type, const SynthConfig& cfg) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(cfg.feature_dim);
  const int block = cfg.feature_dim / cfg.num_types;
  v.segment(static_cast<Eigen::Index>(type) * block, block).setConstant(cfg.prototype_scale);
  return v;
}

DatasetRecord make_record(const SynthConfig& cfg, const std::string& split, int index, Rng& rng) {
  const auto& bank = object_class_bank();
  const int k = static_cast<int>(rng.uniform_int(cfg.objects_min, cfg.objects_max));

  // Distinct classes via a partial shuffle, then ascending so sentence order
  // matches feature row order.
  std::vector<int> types(static_cast<std::size_t>(cfg.num_types));
  for (int i = 0; i < cfg.num_types; ++i) types[static_cast<std::size_t>(i)] = i;
  rng.shuffle(types);
  types.resize(static_cast<std::size_t>(k));
  std::sort(types.begin(), types.end());

  std::string text;
  for (int t : types) {
    const auto& templates = bank[static_cast<std::size_t>(t)].templates;
    const auto pick =
        static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(templates.size()) - 1));
    if (!text.empty()) text.push_back(' ');
    text += templates[pick];
  }

  const int distractors = static_cast<int>(rng.uniform_int(cfg.distractors_min, cfg.distractors_max));
  Eigen::MatrixXd feats(k + distractors, cfg.feature_dim);
  for (int r = 0; r < k; ++r) {
    Eigen::VectorXd row = prototype(types[static_cast<std::size_t>(r)], cfg);
    for (Eigen::Index c = 0; c < row.size(); ++c) row(c) += cfg.feature_noise * rng.normal();
    feats.row(r) = row.transpose();
  }
  for (int r = 0; r < distractors; ++r)
    for (Eigen::Index c = 0; c < feats.cols(); ++c)
      feats(k + r, c) = cfg.feature_noise * rng.normal();

  DatasetRecord rec;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s-%05d", split.c_str(), index);
  rec.id = buf;
  rec.split = split;
  rec.paragraph_text = text;
  rec.paragraph = tokenize(text);
  rec.features = feats.cast<float>();
  return rec;
}

}  // namespace

std::vector<DatasetRecord> synth_generate(const SynthConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  std::vector<DatasetRecord> records;
  records.reserve(
      static_cast<std::size_t>(cfg.train_count + cfg.val_count + cfg.test_count));
  const std::pair<const char*, int> splits[] = {
      {"train", cfg.train_count}, {"val", cfg.val_count}, {"test", cfg.test_count}};
  for (const auto& [split, count] : splits)
    for (int i = 0; i < count; ++i) records.push_back(make_record(cfg, split, i, rng));
  return records;
}

void write_synth_dataset(const std::vector<DatasetRecord>& records,
                         const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir / "features");
  std::vector<DatasetRecord> train, val, test;
  for (DatasetRecord rec : records) {
    const std::string rel = "features/" + rec.id + ".rgnf";
    write_feature_file(out_dir / rel, rec.features);
    rec.feature_path = rel;
    if (rec.split == "train")
      train.push_back(std::move(rec));
    else if (rec.split == "val")
      val.push_back(std::move(rec));
    else
      test.push_back(std::move(rec));
  }
  write_manifest(out_dir / "train.jsonl", train);
  write_manifest(out_dir / "val.jsonl", val);
  write_manifest(out_dir / "test.jsonl", test);
}

}  // namespace paragen
