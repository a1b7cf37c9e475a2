// Copyright (c) 2026 paragen contributors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "paragen/train.hpp"
#include "paragen/transfer.hpp"

using namespace paragen;
namespace fs = std::filesystem;

namespace {

// Fresh scratch directory per test case.
struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("paragen_test_" + tag);
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  REQUIRE(out.good());
}

// One string substitution, asserting the needle exists.
void patch_text(const fs::path& p, const std::string& from, const std::string& to) {
  std::string text = read_file(p);
  const auto pos = text.find(from);
  REQUIRE(pos != std::string::npos);
  text.replace(pos, from.size(), to);
  write_file(p, text);
}

ModelConfig small_config(int vocab) {
  ModelConfig cfg;
  cfg.region_dim = 6;
  cfg.pool_dim = 4;
  cfg.hidden_dim = 3;
  cfg.embed_dim = 4;
  cfg.vocab_size = vocab;
  cfg.max_sentences = 3;
  cfg.max_words = 8;
  return cfg;
}

Checkpoint make_checkpoint(ModelKind kind, const ModelConfig& cfg,
                           const std::vector<std::string>& tokens, std::uint64_t seed) {
  Checkpoint ckpt;
  ckpt.kind = kind;
  ckpt.config = cfg;
  ckpt.vocab_tokens = tokens;
  Rng rng(seed);
  ckpt.params = init_params(kind, cfg, rng);
  ckpt.seed = seed;
  ckpt.step = 7;
  return ckpt;
}

std::vector<std::string> toy_tokens(int vocab) {
  std::vector<std::string> tokens = {"<start>", "<eos>", "<unk>", "<pad>", "<eop>"};
  for (int i = Vocabulary::kNumSpecial; i < vocab; ++i)
    tokens.push_back("w" + std::to_string(i));
  return tokens;
}

bool same_bits(const Mat<double>& a, const Mat<double>& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && (a.array() == b.array()).all();
}

}  // namespace

TEST_CASE("checkpoint round trip is lossless and byte stable") {
  TempDir dir("ckpt_roundtrip");
  const ModelConfig cfg = small_config(9);
  const Checkpoint ckpt = make_checkpoint(ModelKind::hierarchical, cfg, toy_tokens(9), 21);
  const fs::path stem = dir.path / "model";
  save_checkpoint(ckpt, stem);

  const Checkpoint loaded = load_checkpoint(stem);
  CHECK(loaded.format_version == 1);
  CHECK(loaded.kind == ModelKind::hierarchical);
  CHECK(loaded.config.region_dim == cfg.region_dim);
  CHECK(loaded.config.vocab_size == cfg.vocab_size);
  CHECK(loaded.config.stop_threshold == cfg.stop_threshold);
  CHECK(loaded.config.lambda_sentence == cfg.lambda_sentence);
  CHECK(loaded.vocab_tokens == ckpt.vocab_tokens);
  CHECK(loaded.seed == 21);
  CHECK(loaded.step == 7);
  REQUIRE(loaded.params.size() == ckpt.params.size());
  for (std::size_t i = 0; i < ckpt.params.size(); ++i) {
    CHECK(loaded.params.name(i) == ckpt.params.name(i));
    CHECK(same_bits(loaded.params.value(i), ckpt.params.value(i)));
  }

  // Saving the loaded model reproduces both files byte for byte.
  const fs::path stem2 = dir.path / "again";
  save_checkpoint(loaded, stem2);
  CHECK(read_file(dir.path / "again.bin") == read_file(dir.path / "model.bin"));
  std::string j1 = read_file(dir.path / "model.json");
  std::string j2 = read_file(dir.path / "again.json");
  // The payload filename is the only difference by construction.
  const auto fix = [](std::string s, const std::string& from) {
    const auto pos = s.find(from);
    REQUIRE(pos != std::string::npos);
    s.replace(pos, from.size(), "payload.bin");
    return s;
  };
  CHECK(fix(j1, "model.bin") == fix(j2, "again.bin"));
}

TEST_CASE("save rejects inconsistent checkpoints") {
  TempDir dir("ckpt_save_reject");
  const ModelConfig cfg = small_config(9);

  Checkpoint short_vocab = make_checkpoint(ModelKind::flat, cfg, toy_tokens(9), 3);
  short_vocab.vocab_tokens.pop_back();
  CHECK_THROWS_AS(save_checkpoint(short_vocab, dir.path / "a"), IoError);

  Checkpoint poisoned = make_checkpoint(ModelKind::flat, cfg, toy_tokens(9), 3);
  poisoned.params.at("out.b")(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(save_checkpoint(poisoned, dir.path / "b"), IoError);

  // Flat tensors stored under the hierarchical kind do not match its layout.
  Checkpoint mislabeled = make_checkpoint(ModelKind::flat, cfg, toy_tokens(9), 3);
  mislabeled.kind = ModelKind::hierarchical;
  CHECK_THROWS_AS(save_checkpoint(mislabeled, dir.path / "c"), IoError);
}

TEST_CASE("load validates manifest and payload") {
  TempDir dir("ckpt_load_reject");
  const ModelConfig cfg = small_config(9);
  const fs::path stem = dir.path / "m";
  const fs::path json_path = dir.path / "m.json";
  const fs::path bin_path = dir.path / "m.bin";
  // Rewrites a pristine checkpoint before each corruption below.
  const auto reset = [&] {
    save_checkpoint(make_checkpoint(ModelKind::flat, cfg, toy_tokens(9), 5), stem);
  };

  reset();
  patch_text(json_path, "\"format_version\": 1", "\"format_version\": 9");
  CHECK_THROWS_AS(load_checkpoint(stem), IoError);

  reset();
  patch_text(json_path, "\"flat\"", "\"wide\"");
  CHECK_THROWS_AS(load_checkpoint(stem), Error);

  reset();
  patch_text(json_path, "\"rows\": 4", "\"rows\": 5");
  CHECK_THROWS_AS(load_checkpoint(stem), IoError);

  reset();
  patch_text(json_path, "\"pool.W\"", "\"pool.X\"");
  CHECK_THROWS_AS(load_checkpoint(stem), IoError);

  reset();
  patch_text(json_path, "\"<unk>\"", "\"<unx>\"");
  CHECK_THROWS_AS(load_checkpoint(stem), Error);

  reset();
  {
    std::string bytes = read_file(bin_path);
    bytes.resize(bytes.size() - 8);
    write_file(bin_path, bytes);
  }
  CHECK_THROWS_AS(load_checkpoint(stem), IoError);

  reset();
  {
    std::string bytes = read_file(bin_path);
    bytes.push_back('\0');
    write_file(bin_path, bytes);
  }
  CHECK_THROWS_AS(load_checkpoint(stem), IoError);

  reset();
  {
    std::string bytes = read_file(bin_path);
    bytes[0] = 'X';
    write_file(bin_path, bytes);
  }
  CHECK_THROWS_AS(load_checkpoint(stem), IoError);

  reset();
  {
    std::string bytes = read_file(bin_path);
    bytes[4] = 2;  // payload version
    write_file(bin_path, bytes);
  }
  CHECK_THROWS_AS(load_checkpoint(stem), IoError);

  reset();
  {
    std::string bytes = read_file(bin_path);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::memcpy(bytes.data() + 8, &nan, sizeof nan);
    write_file(bin_path, bytes);
  }
  CHECK_THROWS_AS(load_checkpoint(stem), IoError);

  reset();
  fs::remove(bin_path);
  CHECK_THROWS_AS(load_checkpoint(stem), IoError);

  CHECK_THROWS_AS(load_checkpoint(dir.path / "nowhere"), IoError);
}

TEST_CASE("require_kind guards the layout") {
  const ModelConfig cfg = small_config(9);
  const Checkpoint ckpt = make_checkpoint(ModelKind::caption_lm, cfg, toy_tokens(9), 2);
  CHECK_NOTHROW(require_kind(ckpt, ModelKind::caption_lm));
  CHECK_THROWS_AS(require_kind(ckpt, ModelKind::hierarchical), Error);
}

TEST_CASE("model config json round trips") {
  ModelConfig cfg = small_config(17);
  cfg.stop_threshold = 0.75;
  cfg.lambda_sentence = 2.5;
  const ModelConfig back = model_config_from_json_text(model_config_to_json_text(cfg));
  CHECK(back.region_dim == cfg.region_dim);
  CHECK(back.pool_dim == cfg.pool_dim);
  CHECK(back.hidden_dim == cfg.hidden_dim);
  CHECK(back.embed_dim == cfg.embed_dim);
  CHECK(back.vocab_size == cfg.vocab_size);
  CHECK(back.max_sentences == cfg.max_sentences);
  CHECK(back.max_words == cfg.max_words);
  CHECK(back.stop_threshold == cfg.stop_threshold);
  CHECK(back.lambda_sentence == cfg.lambda_sentence);
  CHECK(back.lambda_word == cfg.lambda_word);
  CHECK_THROWS_AS(model_config_from_json_text("not json"), ConfigError);
  CHECK_THROWS_AS(model_config_from_json_text("{\"region_dim\": 3}"), ConfigError);
}

TEST_CASE("vocab mapping pairs shared tokens and flags the rest") {
  const Vocabulary source = build_vocab({tokenize("a dog runs . a cat sits .")}, 1);
  const Vocabulary target = build_vocab({tokenize("a bird flies . a dog runs .")}, 1);
  const VocabMapping m = VocabMapping::build(target, source);
  REQUIRE(static_cast<int>(m.target_to_source.size()) == target.size());
  for (int id = 0; id < Vocabulary::kNumSpecial; ++id) CHECK(m.target_to_source[id] == id);
  for (int id = 0; id < target.size(); ++id) {
    const int src = m.target_to_source[static_cast<std::size_t>(id)];
    if (src >= 0)
      CHECK(source.decode(src) == target.decode(id));
    else
      CHECK(!source.find(target.decode(id)).has_value());
  }
  // Specials plus ".", "a", "dog" and "runs" are shared; "bird" and "flies"
  // are new to the target.
  CHECK(m.shared() == static_cast<std::size_t>(Vocabulary::kNumSpecial) + 4);
  CHECK(m.target_to_source[static_cast<std::size_t>(*target.find("bird"))] == -1);
}

TEST_CASE("transfer copies the word stack and leaves the rest alone") {
  const Vocabulary source_vocab = build_vocab({tokenize("a dog runs . a cat sits .")}, 1);
  const Vocabulary target_vocab = build_vocab({tokenize("a bird flies . a dog runs .")}, 1);

  ModelConfig src_cfg = small_config(source_vocab.size());
  const Checkpoint source =
      make_checkpoint(ModelKind::caption_lm, src_cfg, source_vocab.tokens(), 31);

  ModelConfig tgt_cfg = small_config(target_vocab.size());
  tgt_cfg.region_dim = 10;  // new detector width; pooling must stay fresh
  Rng rng(77);
  ParamSet<double> fresh = init_params(ModelKind::hierarchical, tgt_cfg, rng);
  ParamSet<double> params = fresh;

  const VocabMapping mapping = VocabMapping::build(target_vocab, source_vocab);
  transfer_init(params, tgt_cfg, target_vocab, source, mapping);

  CHECK(same_bits(params.at("word_rnn.l0.W"), source.params.at("word_rnn.l0.W")));
  CHECK(same_bits(params.at("word_rnn.l0.b"), source.params.at("word_rnn.l0.b")));
  CHECK(same_bits(params.at("word_rnn.l1.W"), source.params.at("word_rnn.l1.W")));
  CHECK(same_bits(params.at("word_rnn.l1.b"), source.params.at("word_rnn.l1.b")));
  // Pool widths agree here, so the projection carries over too.
  CHECK(same_bits(params.at("topic_proj.W"), source.params.at("topic_proj.W")));
  CHECK(same_bits(params.at("topic_proj.b"), source.params.at("topic_proj.b")));

  const Mat<double>& src_embed = source.params.at("embed.W");
  const Mat<double>& src_out_W = source.params.at("out.W");
  const Mat<double>& src_out_b = source.params.at("out.b");
  for (int id = 0; id < target_vocab.size(); ++id) {
    const int raw = mapping.target_to_source[static_cast<std::size_t>(id)];
    const int src = raw >= 0 ? raw : Vocabulary::kUnk;
    CHECK((params.at("embed.W").row(id).array() == src_embed.row(src).array()).all());
    CHECK((params.at("out.W").row(id).array() == src_out_W.row(src).array()).all());
    CHECK(params.at("out.b")(id, 0) == src_out_b(src, 0));
  }

  // Everything outside the word stack keeps its fresh initialization.
  for (const char* name : {"pool.W", "pool.b", "sent_rnn.W", "sent_rnn.b", "stop.w", "stop.b",
                           "topic.W1", "topic.b1", "topic.W2", "topic.b2"})
    CHECK(same_bits(params.at(name), fresh.at(name)));

  // A second application changes nothing.
  ParamSet<double> again = params;
  transfer_init(again, tgt_cfg, target_vocab, source, mapping);
  for (std::size_t i = 0; i < params.size(); ++i)
    CHECK(same_bits(again.value(i), params.value(i)));
}

TEST_CASE("transfer skips the projection when the pool width moved") {
  const Vocabulary vocab = build_vocab({tokenize("a dog runs .")}, 1);
  const ModelConfig src_cfg = small_config(vocab.size());
  const Checkpoint source = make_checkpoint(ModelKind::caption_lm, src_cfg, vocab.tokens(), 41);

  ModelConfig tgt_cfg = src_cfg;
  tgt_cfg.pool_dim = src_cfg.pool_dim + 2;
  Rng rng(78);
  ParamSet<double> fresh = init_params(ModelKind::hierarchical, tgt_cfg, rng);
  ParamSet<double> params = fresh;
  transfer_init(params, tgt_cfg, vocab, source, VocabMapping::build(vocab, vocab));
  CHECK(same_bits(params.at("topic_proj.W"), fresh.at("topic_proj.W")));
  CHECK(same_bits(params.at("topic_proj.b"), fresh.at("topic_proj.b")));
  CHECK(same_bits(params.at("word_rnn.l0.W"), source.params.at("word_rnn.l0.W")));
}

TEST_CASE("transfer refuses width mismatches") {
  const Vocabulary vocab = build_vocab({tokenize("a dog runs .")}, 1);
  const ModelConfig src_cfg = small_config(vocab.size());
  const Checkpoint source = make_checkpoint(ModelKind::caption_lm, src_cfg, vocab.tokens(), 51);
  const VocabMapping mapping = VocabMapping::build(vocab, vocab);

  ModelConfig narrow = src_cfg;
  narrow.hidden_dim = src_cfg.hidden_dim + 1;
  Rng rng(79);
  ParamSet<double> params = init_params(ModelKind::hierarchical, narrow, rng);
  CHECK_THROWS_AS(transfer_init(params, narrow, vocab, source, mapping), Error);

  ModelConfig wide_embed = src_cfg;
  wide_embed.embed_dim = src_cfg.embed_dim + 1;
  Rng rng2(80);
  ParamSet<double> params2 = init_params(ModelKind::hierarchical, wide_embed, rng2);
  CHECK_THROWS_AS(transfer_init(params2, wide_embed, vocab, source, mapping), Error);

  // A mapping built against the wrong vocabulary is rejected by size.
  Rng rng3(81);
  ParamSet<double> params3 = init_params(ModelKind::hierarchical, src_cfg, rng3);
  VocabMapping short_map = mapping;
  short_map.target_to_source.pop_back();
  CHECK_THROWS_AS(transfer_init(params3, src_cfg, vocab, source, short_map), Error);
}

TEST_CASE("caption pretraining learns and keeps the pooling frozen") {
  const std::vector<std::string> texts = {"a dog runs .", "a cat sits .", "a bird flies .",
                                          "the dog sits .", "the cat runs .", "a bird sits ."};
  std::vector<TokenizedParagraph> corpus;
  for (const auto& t : texts) corpus.push_back(tokenize(t));
  const Vocabulary vocab = build_vocab(corpus, 1);

  ModelConfig cfg = small_config(vocab.size());
  Rng feat_rng(5);
  std::vector<TrainExample> examples;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    TrainExample ex;
    ex.id = "cap-" + std::to_string(i);
    Eigen::MatrixXf f(2, cfg.region_dim);
    for (Index r = 0; r < f.rows(); ++r)
      for (Index c = 0; c < f.cols(); ++c) f(r, c) = static_cast<float>(feat_rng.normal());
    ex.features = f;
    ex.target = vocab.encode(corpus[i]);
    REQUIRE(ex.target.sentences.size() == 1);
    examples.push_back(std::move(ex));
  }

  OptimConfig optim;
  optim.batch_size = 3;
  optim.max_steps = 120;
  optim.val_interval = 20;
  optim.patience = 50;
  optim.seed = 11;

  const auto mean_loss = [&](const ParamSet<double>& params) {
    double sum = 0.0;
    for (const TrainExample& ex : examples) {
      Tape<double> tape;
      ParamLeaves<double> leaves(tape, params);
      sum += example_loss(tape, leaves, ModelKind::caption_lm, cfg, ex).total.scalar();
    }
    return sum / static_cast<double>(examples.size());
  };

  std::ostringstream log_a;
  const Checkpoint ckpt = pretrain_caption_lm(cfg, optim, examples, examples, vocab, 9, &log_a);
  CHECK(ckpt.kind == ModelKind::caption_lm);
  CHECK(ckpt.params.all_finite());

  Rng init_rng(9);
  const ParamSet<double> fresh = init_params(ModelKind::caption_lm, cfg, init_rng);
  CHECK(same_bits(ckpt.params.at("pool.W"), fresh.at("pool.W")));
  CHECK(same_bits(ckpt.params.at("pool.b"), fresh.at("pool.b")));
  CHECK(!same_bits(ckpt.params.at("embed.W"), fresh.at("embed.W")));
  CHECK(mean_loss(ckpt.params) < mean_loss(fresh));

  // The whole run is deterministic, logs included.
  std::ostringstream log_b;
  const Checkpoint rerun = pretrain_caption_lm(cfg, optim, examples, examples, vocab, 9, &log_b);
  CHECK(log_a.str() == log_b.str());
  for (std::size_t i = 0; i < ckpt.params.size(); ++i)
    CHECK(same_bits(rerun.params.value(i), ckpt.params.value(i)));
}
