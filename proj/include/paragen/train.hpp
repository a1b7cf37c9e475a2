// Copyright (c) 2026 paragen contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <json.hpp>

#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "paragen/adam.hpp"
#include "paragen/checkpoint.hpp"
#include "paragen/dataset.hpp"
#include "paragen/generate.hpp"
#include "paragen/metrics.hpp"

namespace paragen {

struct OptimConfig {
  AdamConfig adam;
  int batch_size = 8;
  long max_steps = 2000;
  int val_interval = 200;  // steps between validations
  int patience = 20;       // validations without improvement before stopping
  std::uint64_t seed = 1;
};

// One record ready for the loss builders.
struct TrainExample {
  std::string id;
  Eigen::MatrixXf features;
  EncodedParagraph target;
};

// Encodes records and enforces the model caps, truncating paragraphs to
// max_sentences and sentences to max_words with a note per truncation to
// `warn` (when given). Feature width mismatches are hard errors.
inline std::vector<TrainExample> prepare_examples(const std::vector<DatasetRecord>& records,
                                                  const Vocabulary& vocab,
                                                  const ModelConfig& cfg,
                                                  std::ostream* warn = nullptr) {
  std::vector<TrainExample> out;
  out.reserve(records.size());
  for (const DatasetRecord& rec : records) {
    if (rec.features.cols() != cfg.region_dim)
      throw ShapeError("record " + rec.id + ": feature width " +
                       std::to_string(rec.features.cols()) + " != model region width " +
                       std::to_string(cfg.region_dim));
    TrainExample ex;
    ex.id = rec.id;
    ex.features = rec.features;
    ex.target = vocab.encode(rec.paragraph);
    if (static_cast<int>(ex.target.sentences.size()) > cfg.max_sentences) {
      if (warn)
        *warn << "record " << rec.id << ": keeping " << cfg.max_sentences << " of "
              << ex.target.sentences.size() << " sentences\n";
      ex.target.sentences.resize(static_cast<std::size_t>(cfg.max_sentences));
    }
    for (auto& s : ex.target.sentences)
      if (static_cast<int>(s.size()) > cfg.max_words) {
        if (warn)
          *warn << "record " << rec.id << ": trimming a sentence of " << s.size() << " tokens to "
                << cfg.max_words << "\n";
        s.resize(static_cast<std::size_t>(cfg.max_words));
      }
    out.push_back(std::move(ex));
  }
  return out;
}

// Builds the right loss graph for the model kind.
template <typename S>
ParagraphLoss<S> example_loss(Tape<S>& tape, const ParamLeaves<S>& leaves, ModelKind kind,
                              const ModelConfig& cfg, const TrainExample& ex) {
  switch (kind) {
    case ModelKind::hierarchical:
      return paragraph_loss(tape, bind_hier(leaves), cfg, ex.features, ex.target);
    case ModelKind::flat:
      return flat_loss(tape, bind_flat(leaves), cfg, ex.features, ex.target);
    case ModelKind::caption_lm:
      if (ex.target.sentences.size() != 1)
        throw Error("caption example " + ex.id + " must have exactly one sentence");
      return caption_loss(tape, bind_flat(leaves), cfg, ex.features, ex.target.sentences[0]);
  }
  throw Error("unknown model kind");
}

// Fraction of supervised word positions whose greedy prediction matches the
// target, teacher forced.
template <typename S>
double token_accuracy(const ParamSet<S>& params, ModelKind kind, const ModelConfig& cfg,
                      const std::vector<TrainExample>& examples) {
  std::size_t hit = 0, total = 0;
  for (const TrainExample& ex : examples) {
    Tape<S> tape;
    ParamLeaves<S> leaves(tape, params);
    const auto loss = example_loss(tape, leaves, kind, cfg, ex);
    for (std::size_t j = 0; j < loss.logits.size(); ++j) {
      hit += detail::argmax_token(loss.logits[j].value()) == loss.targets[j] ? 1 : 0;
      ++total;
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(hit) / static_cast<double>(total);
}

template <typename S>
GenerationResult generate_for_kind(const ParamSet<S>& params, ModelKind kind,
                                   const ModelConfig& cfg, const Eigen::MatrixXf& features,
                                   int top_k = 0) {
  if (kind == ModelKind::hierarchical) return generate(params, cfg, features, top_k);
  return flat_generate(params, cfg, features, top_k);
}

struct TrainResult {
  ParamSet<double> best_params;
  ParamSet<double> final_params;
  double best_score = -std::numeric_limits<double>::infinity();
  long best_step = 0;
  long steps_run = 0;
};

// Minibatch Adam over a fixed example list with periodic validation.
//
// Validation decodes every validation example and scores mean consensus
// similarity plus 100 x corpus BLEU-4 against the references; the best
// checkpoint is the highest scorer, earliest step winning ties. caption_lm
// has no paragraph decode, so it validates by mean teacher-forced loss
// (negated, so higher stays better). Training stops early after `patience`
// validations without a new best.
//
// Determinism: batch order comes from the seeded shuffle, examples are summed
// in batch order, and validation touches nothing stochastic, so two runs from
// the same state produce identical logs and parameters.
template <typename S>
class Trainer {
 public:
  Trainer(ModelKind kind, ModelConfig model_cfg, OptimConfig optim, ParamSet<S> params,
          std::vector<std::string> frozen = {})
      : kind_(kind),
        cfg_(model_cfg),
        optim_(optim),
        params_(std::move(params)),
        adam_(optim.adam, params_),
        rng_(optim.seed) {
    cfg_.validate();
    if (optim_.batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
    if (optim_.max_steps < 1) throw ConfigError("train: max_steps must be >= 1");
    if (optim_.val_interval < 1) throw ConfigError("train: val_interval must be >= 1");
    if (optim_.patience < 1) throw ConfigError("train: patience must be >= 1");
    for (const std::string& name : frozen)
      frozen_.push_back(params_.index_of(name));  // throws on unknown names
  }

  const ParamSet<S>& params() const { return params_; }

  // One optimizer step over the next batch; returns the batch mean losses.
  // Exposed for tests; run() is the normal entry point.
  nlohmann::json train_step(const std::vector<TrainExample>& examples) {
    if (examples.empty()) throw Error("train: no training examples");
    if (order_.size() != examples.size()) reshuffle(examples.size());
    ParamSet<S> grads = params_.zeros_like();
    double loss_sum = 0.0, stop_sum = 0.0, word_sum = 0.0;
    std::size_t batch = 0;
    for (int b = 0; b < optim_.batch_size && cursor_ < order_.size(); ++b, ++cursor_) {
      const TrainExample& ex = examples[order_[cursor_]];
      Tape<S> tape;
      ParamLeaves<S> leaves(tape, params_);
      const auto loss = example_loss(tape, leaves, kind_, cfg_, ex);
      const double total = static_cast<double>(loss.total.scalar());
      if (!std::isfinite(total))
        throw Error("train: non-finite loss at step " + std::to_string(adam_.step_count() + 1) +
                    ", example " + ex.id);
      tape.backward(loss.total);
      leaves.accumulate_grads(grads);
      loss_sum += total;
      stop_sum += static_cast<double>(loss.stop_loss.scalar());
      word_sum += static_cast<double>(loss.word_loss.scalar());
      ++batch;
    }
    const S inv = S(1) / static_cast<S>(batch);
    for (std::size_t i = 0; i < grads.size(); ++i) grads.value(i) *= inv;
    for (std::size_t i : frozen_) grads.value(i).setZero();
    adam_.step(params_, grads);
    if (cursor_ >= order_.size()) reshuffle(examples.size());
    const double n = static_cast<double>(batch);
    return nlohmann::json{{"event", "step"},
                          {"step", adam_.step_count()},
                          {"loss", loss_sum / n},
                          {"stop_loss", stop_sum / n},
                          {"word_loss", word_sum / n}};
  }

  TrainResult run(const std::vector<TrainExample>& train,
                  const std::vector<TrainExample>& val,
                  const std::vector<TokenizedParagraph>& val_refs, const Vocabulary& vocab,
                  std::ostream* log = nullptr) {
    if (train.empty()) throw Error("train: no training examples");
    if (kind_ != ModelKind::caption_lm && val.size() != val_refs.size())
      throw Error("train: validation examples and references differ in count");
    if (log) {
      nlohmann::json cfg_line{{"event", "config"},
                              {"model_kind", to_string(kind_)},
                              {"batch_size", optim_.batch_size},
                              {"max_steps", optim_.max_steps},
                              {"val_interval", optim_.val_interval},
                              {"patience", optim_.patience},
                              {"seed", optim_.seed},
                              {"lr", optim_.adam.lr},
                              {"train_examples", train.size()},
                              {"val_examples", val.size()}};
      *log << cfg_line.dump() << "\n";
    }

    // Reference idf is fixed across validations, build it once.
    std::optional<IdfTable> idf;
    if (!val_refs.empty()) {
      std::vector<TokenSeq> docs;
      docs.reserve(val_refs.size());
      for (const auto& r : val_refs) docs.push_back(flatten_tokens(r));
      idf = IdfTable::build(docs);
    }

    reshuffle(train.size());
    TrainResult result;
    result.best_params = params_.template cast<double>();
    const bool can_validate = !val.empty();
    int bad_validations = 0;
    for (long step = 1; step <= optim_.max_steps; ++step) {
      nlohmann::json line = train_step(train);
      if (log) *log << line.dump() << "\n";
      const bool last = step == optim_.max_steps;
      if (can_validate && (step % optim_.val_interval == 0 || last)) {
        const nlohmann::json val_line = validate(val, val_refs, vocab, idf);
        if (log) *log << val_line.dump() << "\n";
        const double score = val_line.at("score").get<double>();
        if (score > result.best_score) {
          result.best_score = score;
          result.best_step = step;
          result.best_params = params_.template cast<double>();
          bad_validations = 0;
          if (log)
            *log << nlohmann::json{{"event", "best"}, {"step", step}, {"score", score}}.dump()
                 << "\n";
        } else if (++bad_validations >= optim_.patience) {
          result.steps_run = step;
          break;
        }
      }
      result.steps_run = step;
    }
    result.final_params = params_.template cast<double>();
    if (!can_validate) {
      result.best_params = result.final_params;
      result.best_step = result.steps_run;
    }
    if (log)
      *log << nlohmann::json{{"event", "done"},
                             {"steps", result.steps_run},
                             {"best_step", result.best_step},
                             {"best_score", result.best_score}}
                  .dump()
           << "\n";
    return result;
  }

 private:
  void reshuffle(std::size_t n) {
    order_ = rng_.permutation(n);
    cursor_ = 0;
  }

  nlohmann::json validate(const std::vector<TrainExample>& val,
                          const std::vector<TokenizedParagraph>& val_refs,
                          const Vocabulary& vocab, const std::optional<IdfTable>& idf) {
    if (kind_ == ModelKind::caption_lm) {
      // No paragraph decode for a caption model; score the negated mean
      // teacher-forced loss instead so higher stays better.
      double sum = 0.0;
      for (const TrainExample& ex : val) {
        Tape<S> tape;
        ParamLeaves<S> leaves(tape, params_);
        sum += static_cast<double>(example_loss(tape, leaves, kind_, cfg_, ex).total.scalar());
      }
      const double mean = sum / static_cast<double>(val.size());
      return nlohmann::json{{"event", "val"},
                            {"step", adam_.step_count()},
                            {"val_loss", mean},
                            {"score", -mean}};
    }
    BleuAccumulator acc;
    double cider_sum = 0.0;
    std::size_t empty = 0;
    for (std::size_t i = 0; i < val.size(); ++i) {
      const GenerationResult gen = generate_for_kind(params_, kind_, cfg_, val[i].features);
      TokenSeq cand;
      for (const auto& s : vocab.decode(gen.sentences).sentences)
        cand.insert(cand.end(), s.begin(), s.end());
      const TokenSeq ref = flatten_tokens(val_refs[i]);
      if (cand.empty()) {
        ++empty;  // an empty decode scores zero everywhere
        continue;
      }
      acc.add(cand, {ref});
      cider_sum += cider(cand, {ref}, *idf);
    }
    const double mean_cider = cider_sum / static_cast<double>(val.size());
    const double bleu4 = acc.segments() == 0 ? 0.0 : acc.scores()[3];
    return nlohmann::json{{"event", "val"},
                          {"step", adam_.step_count()},
                          {"cider", mean_cider},
                          {"bleu4", bleu4},
                          {"empty", empty},
                          {"score", mean_cider + 100.0 * bleu4}};
  }

  ModelKind kind_;
  ModelConfig cfg_;
  OptimConfig optim_;
  ParamSet<S> params_;
  Adam<S> adam_;
  Rng rng_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
  std::vector<std::size_t> frozen_;
};

// Caption language model pretraining: the flat parameter layout trained on
// single-sentence examples with the region pooling frozen, so the word stack
// carries all the learning and transfers cleanly.
inline Checkpoint pretrain_caption_lm(const ModelConfig& cfg, const OptimConfig& optim,
                                      const std::vector<TrainExample>& train,
                                      const std::vector<TrainExample>& val,
                                      const Vocabulary& vocab, std::uint64_t init_seed,
                                      std::ostream* log = nullptr) {
  Rng rng(init_seed);
  ParamSet<double> params = init_params(ModelKind::caption_lm, cfg, rng);
  Trainer<double> trainer(ModelKind::caption_lm, cfg, optim, std::move(params),
                          {"pool.W", "pool.b"});
  const TrainResult result = trainer.run(train, val, {}, vocab, log);
  Checkpoint ckpt;
  ckpt.kind = ModelKind::caption_lm;
  ckpt.config = cfg;
  ckpt.vocab_tokens = vocab.tokens();
  ckpt.params = result.best_params;
  ckpt.seed = init_seed;
  ckpt.step = result.best_step;
  return ckpt;
}

}  // namespace paragen
