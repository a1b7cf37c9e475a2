// Copyright (c) 2026 paragen contributors
// SPDX-License-Identifier: Apache-2.0
//
// Command line front end: dataset synthesis, training, decoding, scoring,
// corpus statistics, gradient checking and word-stack transfer.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include "paragen/generate.hpp"
#include "paragen/grad_check.hpp"
#include "paragen/metrics.hpp"
#include "paragen/synthetic.hpp"
#include "paragen/train.hpp"
#include "paragen/transfer.hpp"

namespace {

using namespace paragen;
using nlohmann::json;
namespace fs = std::filesystem;

json load_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    json j;
    in >> j;
    return j;
  } catch (const json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

// Applies only the keys present, so config files can stay partial. Unknown
// keys are typos and rejected.
void apply_model_overrides(ModelConfig& cfg, const json& j) {
  for (const auto& [key, value] : j.items()) {
    if (key == "region_dim") cfg.region_dim = value.get<int>();
    else if (key == "pool_dim") cfg.pool_dim = value.get<int>();
    else if (key == "hidden_dim") cfg.hidden_dim = value.get<int>();
    else if (key == "embed_dim") cfg.embed_dim = value.get<int>();
    else if (key == "vocab_size") cfg.vocab_size = value.get<int>();
    else if (key == "max_sentences") cfg.max_sentences = value.get<int>();
    else if (key == "max_words") cfg.max_words = value.get<int>();
    else if (key == "stop_threshold") cfg.stop_threshold = value.get<double>();
    else if (key == "lambda_sentence") cfg.lambda_sentence = value.get<double>();
    else if (key == "lambda_word") cfg.lambda_word = value.get<double>();
    else throw ConfigError("model config: unknown key " + key);
  }
}

void apply_synth_overrides(SynthConfig& cfg, const json& j) {
  for (const auto& [key, value] : j.items()) {
    if (key == "num_types") cfg.num_types = value.get<int>();
    else if (key == "feature_dim") cfg.feature_dim = value.get<int>();
    else if (key == "feature_noise") cfg.feature_noise = value.get<double>();
    else if (key == "prototype_scale") cfg.prototype_scale = value.get<double>();
    else if (key == "objects_min") cfg.objects_min = value.get<int>();
    else if (key == "objects_max") cfg.objects_max = value.get<int>();
    else if (key == "distractors_min") cfg.distractors_min = value.get<int>();
    else if (key == "distractors_max") cfg.distractors_max = value.get<int>();
    else if (key == "train_count") cfg.train_count = value.get<int>();
    else if (key == "val_count") cfg.val_count = value.get<int>();
    else if (key == "test_count") cfg.test_count = value.get<int>();
    else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
    else throw ConfigError("synth config: unknown key " + key);
  }
}

std::vector<TokenizedParagraph> reference_paragraphs(const std::vector<DatasetRecord>& records) {
  std::vector<TokenizedParagraph> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.paragraph);
  return out;
}

struct TrainArgs {
  std::string data_dir;
  std::string train_manifest;
  std::string val_manifest;
  std::string ckpt_dir;
  std::string model = "hierarchical";
  std::string config_path;
  std::string init_from;
  std::string log_path;
  std::string precision = "f64";
  int min_count = 1;
  long steps = 2000;
  int batch = 8;
  double lr = 1e-3;
  int val_interval = 200;
  int patience = 20;
  std::uint64_t seed = 1;
};

void add_train_options(CLI::App* cmd, TrainArgs& a, bool with_model_choice) {
  cmd->add_option("--data", a.data_dir, "dataset directory with train.jsonl and val.jsonl");
  cmd->add_option("--train-manifest", a.train_manifest, "explicit training manifest");
  cmd->add_option("--val-manifest", a.val_manifest, "explicit validation manifest");
  cmd->add_option("--ckpt-dir", a.ckpt_dir, "output directory for checkpoints and logs")
      ->required();
  if (with_model_choice)
    cmd->add_option("--model", a.model, "hierarchical or flat")
        ->check(CLI::IsMember({"hierarchical", "flat"}));
  cmd->add_option("--config", a.config_path, "JSON file with model dimension overrides");
  cmd->add_option("--init-from", a.init_from, "checkpoint stem to start from");
  cmd->add_option("--log", a.log_path, "training log path (default <ckpt-dir>/train_log.jsonl)");
  cmd->add_option("--precision", a.precision, "compute scalar: f64 (default) or f32")
      ->check(CLI::IsMember({"f64", "f32"}));
  cmd->add_option("--min-count", a.min_count, "vocabulary count threshold");
  cmd->add_option("--steps", a.steps, "optimizer steps");
  cmd->add_option("--batch", a.batch, "examples per step");
  cmd->add_option("--lr", a.lr, "Adam learning rate");
  cmd->add_option("--val-interval", a.val_interval, "steps between validations");
  cmd->add_option("--patience", a.patience, "validations without improvement before stopping");
  cmd->add_option("--seed", a.seed, "seed for init and batch order");
}

struct LoadedData {
  std::vector<DatasetRecord> train;
  std::vector<DatasetRecord> val;
};

LoadedData load_train_val(const TrainArgs& a) {
  LoadedData d;
  fs::path train_path, val_path;
  if (!a.train_manifest.empty()) {
    train_path = a.train_manifest;
    if (!a.val_manifest.empty()) val_path = a.val_manifest;
  } else if (!a.data_dir.empty()) {
    train_path = fs::path(a.data_dir) / "train.jsonl";
    val_path = fs::path(a.data_dir) / "val.jsonl";
    if (!a.val_manifest.empty()) val_path = a.val_manifest;
  } else {
    throw ConfigError("train: pass --data or --train-manifest");
  }
  d.train = load_dataset(train_path);
  if (!val_path.empty() && fs::exists(val_path)) d.val = load_dataset(val_path);
  return d;
}

// Everything a training run needs before the first step.
struct TrainSetup {
  ModelKind kind = ModelKind::hierarchical;
  ModelConfig cfg;
  Vocabulary vocab;
  ParamSet<double> params;
};

TrainSetup setup_training(const TrainArgs& a, ModelKind kind,
                          const std::vector<DatasetRecord>& train_records) {
  TrainSetup s;
  s.kind = kind;
  if (!a.init_from.empty()) {
    // Resuming or transferring: the checkpoint defines config and vocab.
    Checkpoint ckpt = load_checkpoint(a.init_from);
    require_kind(ckpt, kind);
    if (!a.config_path.empty())
      std::cerr << "note: --config ignored, --init-from supplies the configuration\n";
    s.cfg = ckpt.config;
    s.vocab = ckpt.vocab();
    s.params = std::move(ckpt.params);
    return s;
  }
  s.cfg = ModelConfig::desk();
  if (!a.config_path.empty()) apply_model_overrides(s.cfg, load_json_file(a.config_path));
  if (!train_records.empty())
    s.cfg.region_dim = static_cast<int>(train_records[0].features.cols());
  s.vocab = build_vocab(reference_paragraphs(train_records), a.min_count);
  s.cfg.vocab_size = s.vocab.size();
  s.cfg.validate();
  Rng rng(a.seed);
  s.params = init_params(kind, s.cfg, rng);
  return s;
}

void save_run_checkpoint(const TrainSetup& s, const ParamSet<double>& params, std::uint64_t seed,
                         long step, const fs::path& stem) {
  Checkpoint ckpt;
  ckpt.kind = s.kind;
  ckpt.config = s.cfg;
  ckpt.vocab_tokens = s.vocab.tokens();
  ckpt.params = params;
  ckpt.seed = seed;
  ckpt.step = step;
  save_checkpoint(ckpt, stem);
}

// A caption model trains on single sentences; multi-sentence records become
// one example per sentence, all sharing the record's features.
std::vector<TrainExample> to_caption_examples(const std::vector<TrainExample>& examples) {
  std::vector<TrainExample> out;
  for (const TrainExample& ex : examples)
    for (std::size_t i = 0; i < ex.target.sentences.size(); ++i) {
      TrainExample cap;
      cap.id = ex.id + "#" + std::to_string(i);
      cap.features = ex.features;
      cap.target.sentences = {ex.target.sentences[i]};
      out.push_back(std::move(cap));
    }
  return out;
}

template <typename S>
int run_training(const TrainArgs& a, ModelKind kind) {
  const LoadedData data = load_train_val(a);
  if (data.train.empty()) throw Error("train: empty training manifest");
  const TrainSetup s = setup_training(a, kind, data.train);

  auto train_examples = prepare_examples(data.train, s.vocab, s.cfg, &std::cerr);
  auto val_examples = prepare_examples(data.val, s.vocab, s.cfg, nullptr);
  const auto val_refs = reference_paragraphs(data.val);
  if (kind == ModelKind::caption_lm) {
    train_examples = to_caption_examples(train_examples);
    val_examples = to_caption_examples(val_examples);
  }

  OptimConfig optim;
  optim.adam.lr = a.lr;
  optim.batch_size = a.batch;
  optim.max_steps = a.steps;
  optim.val_interval = a.val_interval;
  optim.patience = a.patience;
  optim.seed = a.seed;

  fs::create_directories(a.ckpt_dir);
  const fs::path log_path =
      a.log_path.empty() ? fs::path(a.ckpt_dir) / "train_log.jsonl" : fs::path(a.log_path);
  std::ofstream log(log_path, std::ios::trunc);
  if (!log) throw IoError("cannot open " + log_path.string() + " for writing");

  Trainer<S> trainer(kind, s.cfg, optim, s.params.template cast<S>(),
                     kind == ModelKind::caption_lm
                         ? std::vector<std::string>{"pool.W", "pool.b"}
                         : std::vector<std::string>{});
  const TrainResult result = kind == ModelKind::caption_lm
                                 ? trainer.run(train_examples, val_examples, {}, s.vocab, &log)
                                 : trainer.run(train_examples, val_examples, val_refs, s.vocab,
                                               &log);

  save_run_checkpoint(s, result.best_params, a.seed, result.best_step,
                      fs::path(a.ckpt_dir) / "best");
  save_run_checkpoint(s, result.final_params, a.seed, result.steps_run,
                      fs::path(a.ckpt_dir) / "final");
  std::cout << "trained " << result.steps_run << " steps; best step " << result.best_step
            << " score " << result.best_score << "\n"
            << "checkpoints: " << (fs::path(a.ckpt_dir) / "best").string() << " and "
            << (fs::path(a.ckpt_dir) / "final").string() << "\n";
  return 0;
}

int cmd_train(const TrainArgs& a, ModelKind kind) {
  if (a.precision == "f32") return run_training<float>(a, kind);
  return run_training<double>(a, kind);
}

struct GenerateArgs {
  std::string checkpoint;
  std::string manifest;
  std::string split;
  std::string out_path;
  std::string precision = "f64";
  int top_k = 0;
};

template <typename S>
void run_generation(const GenerateArgs& a, const Checkpoint& ckpt, std::ostream& out) {
  const Vocabulary vocab = ckpt.vocab();
  const ParamSet<S> params = ckpt.params.cast<S>();
  auto records = load_dataset(a.manifest);
  for (const DatasetRecord& rec : records) {
    if (!a.split.empty() && rec.split != a.split) continue;
    const GenerationResult gen =
        generate_for_kind(params, ckpt.kind, ckpt.config, rec.features, a.top_k);
    const TokenizedParagraph decoded = vocab.decode(gen.sentences);
    json line;
    line["id"] = rec.id;
    line["paragraph"] = detokenize(decoded);
    line["sentences"] = decoded.sentences;
    line["token_ids"] = gen.sentences;
    line["stop_probs"] = gen.stop_probs;
    out << line.dump() << "\n";
  }
}

int cmd_generate(const GenerateArgs& a) {
  const Checkpoint ckpt = load_checkpoint(a.checkpoint);
  if (ckpt.kind == ModelKind::caption_lm)
    throw Error("generate: a caption model decodes no paragraphs; transfer it first");
  std::ofstream out(a.out_path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + a.out_path + " for writing");
  if (a.precision == "f32")
    run_generation<float>(a, ckpt, out);
  else
    run_generation<double>(a, ckpt, out);
  if (!out) throw IoError("short write to " + a.out_path);
  return 0;
}

struct EvaluateArgs {
  std::string predictions;
  std::string manifest;
  std::string split;
  std::string out_path;
};

int cmd_evaluate(const EvaluateArgs& a) {
  std::ifstream in(a.predictions);
  if (!in) throw IoError("cannot open predictions " + a.predictions);
  std::map<std::string, TokenizedParagraph> preds;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw IoError(a.predictions + ":" + std::to_string(lineno) + ": " + e.what());
    }
    const std::string id = j.at("id").get<std::string>();
    TokenizedParagraph p;
    if (j.contains("sentences"))
      p.sentences = j.at("sentences").get<std::vector<std::vector<std::string>>>();
    else
      p = tokenize(j.at("paragraph").get<std::string>());
    if (!preds.emplace(id, std::move(p)).second)
      throw IoError(a.predictions + ": duplicate prediction for " + id);
  }

  const auto records = load_dataset(a.manifest, /*load_features=*/false);
  std::vector<TokenizedParagraph> predictions, references;
  for (const DatasetRecord& rec : records) {
    if (!a.split.empty() && rec.split != a.split) continue;
    auto it = preds.find(rec.id);
    if (it == preds.end()) throw Error("evaluate: no prediction for record " + rec.id);
    predictions.push_back(it->second);
    references.push_back(rec.paragraph);
  }
  if (predictions.empty()) throw Error("evaluate: nothing to score");

  const ScoreReport report = score_predictions(predictions, references);
  std::cout << report.table();
  if (!a.out_path.empty()) {
    json j;
    j["bleu"] = report.bleu;
    j["cider"] = report.mean_cider;
    j["scored"] = report.scored;
    const CorpusStats& st = report.prediction_stats;
    j["prediction_stats"] = {
        {"paragraphs", st.paragraphs},
        {"sentences", st.sentences},
        {"avg_tokens_per_paragraph", st.avg_tokens_per_paragraph},
        {"std_tokens_per_paragraph", st.std_tokens_per_paragraph},
        {"avg_tokens_per_sentence", st.avg_tokens_per_sentence},
        {"vocab_size", st.vocab_size}};
    if (st.mean_diversity) j["prediction_stats"]["mean_diversity"] = *st.mean_diversity;
    std::ofstream out(a.out_path, std::ios::trunc);
    if (!out) throw IoError("cannot open " + a.out_path + " for writing");
    out << j.dump(2) << "\n";
  }
  return 0;
}

struct StatsArgs {
  std::string manifest;
  std::string split;
  std::string out_path;
};

int cmd_stats(const StatsArgs& a) {
  const auto records = load_dataset(a.manifest, /*load_features=*/false);
  std::vector<TokenizedParagraph> paragraphs;
  for (const DatasetRecord& rec : records)
    if (a.split.empty() || rec.split == a.split) paragraphs.push_back(rec.paragraph);
  if (paragraphs.empty()) throw Error("stats: no matching records");
  const CorpusStats st = corpus_stats(paragraphs);

  char buf[128];
  std::snprintf(buf, sizeof(buf), "%-26s  %10zu\n", "paragraphs", st.paragraphs);
  std::cout << buf;
  std::snprintf(buf, sizeof(buf), "%-26s  %10zu\n", "sentences", st.sentences);
  std::cout << buf;
  std::snprintf(buf, sizeof(buf), "%-26s  %10.2f\n", "avg tokens per paragraph",
                st.avg_tokens_per_paragraph);
  std::cout << buf;
  std::snprintf(buf, sizeof(buf), "%-26s  %10.2f\n", "std tokens per paragraph",
                st.std_tokens_per_paragraph);
  std::cout << buf;
  std::snprintf(buf, sizeof(buf), "%-26s  %10.2f\n", "avg tokens per sentence",
                st.avg_tokens_per_sentence);
  std::cout << buf;
  std::snprintf(buf, sizeof(buf), "%-26s  %10zu\n", "vocabulary", st.vocab_size);
  std::cout << buf;
  if (st.mean_diversity) {
    std::snprintf(buf, sizeof(buf), "%-26s  %10.2f\n", "mean diversity", *st.mean_diversity);
    std::cout << buf;
  }
  if (st.diversity_skipped > 0) {
    std::snprintf(buf, sizeof(buf), "%-26s  %10zu\n", "single-sentence (no div.)",
                  st.diversity_skipped);
    std::cout << buf;
  }

  if (!a.out_path.empty()) {
    json j = {{"paragraphs", st.paragraphs},
              {"sentences", st.sentences},
              {"avg_tokens_per_paragraph", st.avg_tokens_per_paragraph},
              {"std_tokens_per_paragraph", st.std_tokens_per_paragraph},
              {"avg_tokens_per_sentence", st.avg_tokens_per_sentence},
              {"vocab_size", st.vocab_size},
              {"diversity_skipped", st.diversity_skipped}};
    if (st.mean_diversity) j["mean_diversity"] = *st.mean_diversity;
    std::ofstream out(a.out_path, std::ios::trunc);
    if (!out) throw IoError("cannot open " + a.out_path + " for writing");
    out << j.dump(2) << "\n";
  }
  return 0;
}

struct GradCheckArgs {
  std::string config_path;
  std::uint64_t seed = 7;
  double eps = 1e-5;
  double tolerance = 1e-5;
  bool inject_error = false;
};

int cmd_grad_check(const GradCheckArgs& a) {
  // Dimensions small enough for an exhaustive sweep in seconds.
  ModelConfig cfg;
  cfg.region_dim = 8;
  cfg.pool_dim = 6;
  cfg.hidden_dim = 5;
  cfg.embed_dim = 6;
  cfg.vocab_size = 12;
  cfg.max_sentences = 4;
  cfg.max_words = 8;
  if (!a.config_path.empty()) apply_model_overrides(cfg, load_json_file(a.config_path));
  cfg.validate();

  Rng rng(a.seed);
  ParamSet<double> params = init_params(ModelKind::hierarchical, cfg, rng);

  Eigen::MatrixXf features(3, cfg.region_dim);
  for (Eigen::Index r = 0; r < features.rows(); ++r)
    for (Eigen::Index c = 0; c < features.cols(); ++c)
      features(r, c) = static_cast<float>(rng.normal());
  EncodedParagraph target;
  target.sentences = {{5, 7, 9}, {10, 6}};
  for (auto& s : target.sentences)
    for (int& id : s)
      if (id >= cfg.vocab_size) id = cfg.vocab_size - 1;

  const auto loss_at = [&](const ParamSet<double>& p) {
    Tape<double> tape;
    ParamLeaves<double> leaves(tape, p);
    return paragraph_loss(tape, bind_hier(leaves), cfg, features, target).total.scalar();
  };
  const auto analytic_at = [&](const ParamSet<double>& p) {
    Tape<double> tape;
    ParamLeaves<double> leaves(tape, p);
    const auto loss = paragraph_loss(tape, bind_hier(leaves), cfg, features, target);
    tape.backward(loss.total);
    ParamSet<double> grads = p.zeros_like();
    leaves.accumulate_grads(grads);
    if (a.inject_error) grads.at("topic.W1").array() += 0.5;  // self test
    return grads;
  };

  // Coordinates whose max-pool winner sits within 10*eps of the runner-up
  // would straddle the kink, so they are excluded.
  Mat<double> proj = params.at("pool.W") * region_columns<double>(features);
  proj.colwise() += params.at("pool.b").col(0);
  const Vec<double> margin = rowwise_top2_margin(proj);
  const Index pool_w_idx = static_cast<Index>(params.index_of("pool.W"));
  const Index pool_b_idx = static_cast<Index>(params.index_of("pool.b"));
  const auto skip = [&](std::size_t p, Index k) {
    const Index row = p == static_cast<std::size_t>(pool_w_idx)
                          ? k / params.value(p).cols()
                          : (p == static_cast<std::size_t>(pool_b_idx) ? k : -1);
    return row >= 0 && margin(row) < 10.0 * a.eps;
  };

  GradCheckOptions opt;
  opt.eps = a.eps;
  opt.seed = a.seed;
  // The loss sits well above 1, so finite differences carry around 1e-9 of
  // absolute noise; gradients under the floor are held to absolute
  // agreement of tolerance * floor instead of a meaningless relative error.
  opt.denom_floor = 1e-3;
  const GradCheckReport report = grad_check(params, loss_at, analytic_at, opt, skip);

  std::cout << "checked " << report.checked << " coordinates (" << report.skipped
            << " skipped near pooling ties)\n"
            << "max relative error " << report.max_rel_err << " at " << report.worst_param
            << "[" << report.worst_index << "]"
            << " analytic " << report.worst_analytic << " numeric " << report.worst_numeric
            << "\n";
  if (report.max_rel_err > a.tolerance) {
    std::cout << "FAIL: exceeds tolerance " << a.tolerance << "\n";
    return 1;
  }
  std::cout << "OK: within tolerance " << a.tolerance << "\n";
  return 0;
}

struct SynthArgs {
  std::string out_dir;
  std::string config_path;
  SynthConfig cfg;
};

int cmd_synth(const SynthArgs& a) {
  SynthConfig cfg = a.cfg;
  if (!a.config_path.empty()) apply_synth_overrides(cfg, load_json_file(a.config_path));
  const auto records = synth_generate(cfg);
  write_synth_dataset(records, a.out_dir);
  std::size_t train = 0, val = 0, test = 0;
  for (const auto& r : records) {
    if (r.split == "train") ++train;
    else if (r.split == "val") ++val;
    else ++test;
  }
  std::cout << "wrote " << train << " train, " << val << " val, " << test << " test records to "
            << a.out_dir << "\n";
  return 0;
}

struct TransferArgs {
  std::string source;
  std::string data_dir;
  std::string train_manifest;
  std::string out_stem;
  std::string model = "hierarchical";
  std::string config_path;
  int min_count = 1;
  std::uint64_t seed = 1;
};

int cmd_transfer_init(const TransferArgs& a) {
  const Checkpoint source = load_checkpoint(a.source);

  fs::path manifest = a.train_manifest.empty() ? fs::path(a.data_dir) / "train.jsonl"
                                               : fs::path(a.train_manifest);
  const auto records = load_dataset(manifest);
  if (records.empty()) throw Error("transfer-init: empty manifest " + manifest.string());

  const ModelKind kind = model_kind_from_string(a.model);
  ModelConfig cfg = ModelConfig::desk();
  // Width compatibility with the source is mandatory; inherit its widths
  // before applying explicit overrides.
  cfg.hidden_dim = source.config.hidden_dim;
  cfg.embed_dim = source.config.embed_dim;
  cfg.pool_dim = source.config.pool_dim;
  if (!a.config_path.empty()) apply_model_overrides(cfg, load_json_file(a.config_path));
  cfg.region_dim = static_cast<int>(records[0].features.cols());

  const Vocabulary vocab = build_vocab(reference_paragraphs(records), a.min_count);
  cfg.vocab_size = vocab.size();
  cfg.validate();

  Rng rng(a.seed);
  ParamSet<double> params = init_params(kind, cfg, rng);
  const VocabMapping mapping = VocabMapping::build(vocab, source.vocab());
  transfer_init(params, cfg, vocab, source, mapping);

  Checkpoint out;
  out.kind = kind;
  out.config = cfg;
  out.vocab_tokens = vocab.tokens();
  out.params = std::move(params);
  out.seed = a.seed;
  out.step = 0;
  save_checkpoint(out, a.out_stem);
  std::cout << "transferred word stack: " << mapping.shared() << " of " << vocab.size()
            << " target tokens shared with the source; wrote " << a.out_stem << ".json\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hierarchical paragraph generator"};
  app.require_subcommand(1);

  SynthArgs synth_args;
  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  synth->add_option("--out", synth_args.out_dir, "output directory")->required();
  synth->add_option("--config", synth_args.config_path, "JSON overrides for the generator");
  synth->add_option("--seed", synth_args.cfg.seed, "generator seed");
  synth->add_option("--train-count", synth_args.cfg.train_count, "training records");
  synth->add_option("--val-count", synth_args.cfg.val_count, "validation records");
  synth->add_option("--test-count", synth_args.cfg.test_count, "test records");

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "train a paragraph model");
  add_train_options(train, train_args, /*with_model_choice=*/true);

  TrainArgs pretrain_args;
  auto* pretrain = app.add_subcommand("pretrain-lm", "train a caption language model");
  add_train_options(pretrain, pretrain_args, /*with_model_choice=*/false);

  TransferArgs transfer_args;
  auto* transfer = app.add_subcommand("transfer-init",
                                      "seed a paragraph model from a caption checkpoint");
  transfer->add_option("--source", transfer_args.source, "source checkpoint stem")->required();
  transfer->add_option("--data", transfer_args.data_dir, "target dataset directory");
  transfer->add_option("--train-manifest", transfer_args.train_manifest,
                       "explicit target training manifest");
  transfer->add_option("--out", transfer_args.out_stem, "output checkpoint stem")->required();
  transfer->add_option("--model", transfer_args.model, "target kind: hierarchical or flat")
      ->check(CLI::IsMember({"hierarchical", "flat"}));
  transfer->add_option("--config", transfer_args.config_path, "target model overrides");
  transfer->add_option("--min-count", transfer_args.min_count, "vocabulary count threshold");
  transfer->add_option("--seed", transfer_args.seed, "seed for the fresh tensors");

  GenerateArgs gen_args;
  auto* gen = app.add_subcommand("generate", "decode paragraphs for a manifest");
  gen->add_option("--checkpoint", gen_args.checkpoint, "checkpoint stem")->required();
  gen->add_option("--manifest", gen_args.manifest, "dataset manifest")->required();
  gen->add_option("--split", gen_args.split, "only records with this split");
  gen->add_option("--out", gen_args.out_path, "predictions JSONL path")->required();
  gen->add_option("--top-k", gen_args.top_k, "pool only the first k regions (0 = all)");
  gen->add_option("--precision", gen_args.precision, "compute scalar: f64 (default) or f32")
      ->check(CLI::IsMember({"f64", "f32"}));

  EvaluateArgs eval_args;
  auto* eval = app.add_subcommand("evaluate", "score predictions against references");
  eval->add_option("--predictions", eval_args.predictions, "predictions JSONL")->required();
  eval->add_option("--manifest", eval_args.manifest, "reference manifest")->required();
  eval->add_option("--split", eval_args.split, "only records with this split");
  eval->add_option("--out", eval_args.out_path, "JSON report path");

  StatsArgs stats_args;
  auto* stats = app.add_subcommand("stats", "descriptive statistics of a dataset");
  stats->add_option("--manifest", stats_args.manifest, "dataset manifest")->required();
  stats->add_option("--split", stats_args.split, "only records with this split");
  stats->add_option("--out", stats_args.out_path, "JSON output path");

  GradCheckArgs gc_args;
  auto* gc = app.add_subcommand("grad-check", "finite-difference gradient audit");
  gc->add_option("--config", gc_args.config_path, "model dimension overrides");
  gc->add_option("--seed", gc_args.seed, "parameter and input seed");
  gc->add_option("--eps", gc_args.eps, "finite difference step");
  gc->add_option("--tolerance", gc_args.tolerance, "max relative error accepted");
  gc->add_flag("--inject-grad-error", gc_args.inject_error,
               "corrupt one gradient to prove the check catches it");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) return cmd_synth(synth_args);
    if (train->parsed())
      return cmd_train(train_args, model_kind_from_string(train_args.model));
    if (pretrain->parsed()) return cmd_train(pretrain_args, ModelKind::caption_lm);
    if (transfer->parsed()) return cmd_transfer_init(transfer_args);
    if (gen->parsed()) return cmd_generate(gen_args);
    if (eval->parsed()) return cmd_evaluate(eval_args);
    if (stats->parsed()) return cmd_stats(stats_args);
    if (gc->parsed()) return cmd_grad_check(gc_args);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
