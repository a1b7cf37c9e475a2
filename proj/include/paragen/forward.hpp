// Copyright (c) 2026 paragen contributors
// SPDX-License-Identifier: Apache-2.0
//
// Differentiable forward graphs for training. Time steps are unrolled onto
// the tape; one backward() then yields every parameter gradient. The same
// builders back greedy decoding, so training and generation cannot drift
// apart.

#pragma once

#include <vector>

#include "paragen/model.hpp"

namespace paragen {

// Casts the stored float features to the compute scalar, regions as columns.
template <typename S>
Mat<S> region_columns(const Eigen::MatrixXf& features) {
  Mat<S> out(features.cols(), features.rows());
  for (Eigen::Index r = 0; r < features.rows(); ++r)
    for (Eigen::Index c = 0; c < features.cols(); ++c)
      out(c, r) = static_cast<S>(features(r, c));
  return out;
}

// Projects every region and takes the coefficient-wise max over regions.
// Each output coefficient is a max of per-region dot products, so the result
// is bit-identical under any permutation of the regions. top_k limits pooling
// to the first k regions (detection order); pass 0 for all.
template <typename S>
Var<S> pool_regions(Tape<S>& tape, Var<S> pool_W, Var<S> pool_b, const Eigen::MatrixXf& features,
                    int top_k = 0) {
  if (features.rows() < 1 || features.cols() < 1)
    throw ShapeError("pool_regions: empty region set");
  if (features.cols() != pool_W.cols())
    throw ShapeError("pool_regions: feature width " + std::to_string(features.cols()) +
                     " != pool input width " + std::to_string(pool_W.cols()));
  if (top_k < 0 || top_k > features.rows())
    throw ShapeError("pool_regions: top_k " + std::to_string(top_k) + " outside [0, " +
                     std::to_string(features.rows()) + "]");
  Mat<S> cols = region_columns<S>(top_k == 0 ? features : features.topRows(top_k).eval());
  Var<S> proj = add_colwise(matmul(pool_W, tape.leaf(std::move(cols))), pool_b);
  return rowwise_max(proj);
}

template <typename S>
struct SentenceStep {
  Var<S> h;
  Var<S> stop_logit;
  Var<S> topic;  // pool_dim x 1
};

// Unrolls the sentence LSTM for `steps` steps from zero state, feeding the
// pooled vector every step. Each step yields a stop logit and a topic vector
// through the two-layer topic head.
template <typename S>
std::vector<SentenceStep<S>> sentence_rnn_forward(Tape<S>& tape, const HierVars<S>& v,
                                                  Var<S> pooled, int steps, int max_steps) {
  if (steps < 1 || steps > max_steps)
    throw ShapeError("sentence_rnn_forward: step count " + std::to_string(steps) +
                     " outside [1, " + std::to_string(max_steps) + "]");
  std::vector<SentenceStep<S>> out;
  out.reserve(static_cast<std::size_t>(steps));
  LstmState<S> state = zero_state(tape, v.sent.W.rows() / 4);
  for (int i = 0; i < steps; ++i) {
    state = lstm_cell(pooled, state, v.sent);
    SentenceStep<S> step;
    step.h = state.h;
    step.stop_logit = add(matmul(v.stop_w, state.h), v.stop_b);
    step.topic = add(matmul(v.topic_W2, relu(add(matmul(v.topic_W1, state.h), v.topic_b1))),
                     v.topic_b2);
    out.push_back(step);
  }
  return out;
}

// Two-layer word LSTM state pair.
template <typename S>
struct WordState {
  LstmState<S> l0, l1;
};

template <typename S>
WordState<S> word_zero_state(Tape<S>& tape, Index hidden) {
  return {zero_state(tape, hidden), zero_state(tape, hidden)};
}

template <typename S>
Var<S> word_step(const WordStackVars<S>& w, WordState<S>& state, Var<S> x) {
  state.l0 = lstm_cell(x, state.l0, w.l0);
  state.l1 = lstm_cell(state.l0.h, state.l1, w.l1);
  return add(matmul(w.out_W, state.l1.h), w.out_b);
}

// Teacher-forced decode of `targets`. The decoder sees the projected
// conditioning vector, then the start marker, then each target token but the
// last; it must predict every target in turn. Returns one logit column per
// target. The caller appends the end token to `targets` when the sequence
// should learn to stop.
template <typename S>
std::vector<Var<S>> word_logits(Tape<S>& tape, const WordStackVars<S>& w, Var<S> conditioning,
                                const std::vector<int>& targets, int vocab_size) {
  if (targets.empty()) throw ShapeError("word_logits: no targets");
  for (int id : targets)
    if (id < 0 || id >= vocab_size)
      throw ShapeError("word_logits: token id " + std::to_string(id) + " outside vocabulary of " +
                       std::to_string(vocab_size));
  WordState<S> state = word_zero_state(tape, w.l0.W.rows() / 4);
  std::vector<Var<S>> logits;
  logits.reserve(targets.size());
  Var<S> x = add(matmul(w.tproj_W, conditioning), w.tproj_b);
  word_step(w, state, x);  // conditioning step, prediction unused
  x = embedding_lookup(w.embed, Vocabulary::kStart);
  logits.push_back(word_step(w, state, x));
  for (std::size_t j = 0; j + 1 < targets.size(); ++j) {
    x = embedding_lookup(w.embed, targets[j]);
    logits.push_back(word_step(w, state, x));
  }
  return logits;
}

template <typename S>
struct ParagraphLoss {
  Var<S> total;         // lambda-weighted sum
  Var<S> stop_loss;     // unweighted sum over sentence steps
  Var<S> word_loss;     // unweighted sum over word steps
  std::size_t stop_terms = 0;
  std::size_t word_terms = 0;
  std::vector<Var<S>> logits;  // one column per supervised word position
  std::vector<int> targets;    // aligned with logits
};

namespace detail {

template <typename S>
ParagraphLoss<S> assemble_loss(const ModelConfig& cfg, Var<S> stop_sum, std::size_t stop_terms,
                               Var<S> word_sum, std::size_t word_terms) {
  ParagraphLoss<S> out;
  out.stop_loss = stop_sum;
  out.word_loss = word_sum;
  out.stop_terms = stop_terms;
  out.word_terms = word_terms;
  // Weights enter only here, as two scale nodes, so doubling both weights
  // exactly doubles every gradient and a zero weight cuts its branch off.
  out.total = add(scale(stop_sum, static_cast<S>(cfg.lambda_sentence)),
                  scale(word_sum, static_cast<S>(cfg.lambda_word)));
  return out;
}

inline void check_paragraph(const EncodedParagraph& y, const ModelConfig& cfg) {
  if (y.sentences.empty()) throw ShapeError("paragraph_loss: paragraph has no sentences");
  if (static_cast<int>(y.sentences.size()) > cfg.max_sentences)
    throw ShapeError("paragraph_loss: " + std::to_string(y.sentences.size()) +
                     " sentences exceed the cap of " + std::to_string(cfg.max_sentences));
  for (const auto& s : y.sentences) {
    if (s.empty()) throw ShapeError("paragraph_loss: empty sentence");
    if (static_cast<int>(s.size()) > cfg.max_words)
      throw ShapeError("paragraph_loss: sentence of " + std::to_string(s.size()) +
                       " tokens exceeds the cap of " + std::to_string(cfg.max_words));
  }
}

}  // namespace detail

// Hierarchical training loss for one example:
//   stop head   binary cross entropy at each of S sentence steps, labels
//               0, ..., 0, 1 (only the last step should stop)
//   word head   softmax cross entropy at every word position of every
//               sentence, including one end-token prediction per sentence
// weighted by lambda_sentence and lambda_word.
template <typename S>
ParagraphLoss<S> paragraph_loss(Tape<S>& tape, const HierVars<S>& v, const ModelConfig& cfg,
                                const Eigen::MatrixXf& features, const EncodedParagraph& y) {
  detail::check_paragraph(y, cfg);
  const int S_count = static_cast<int>(y.sentences.size());
  Var<S> pooled = pool_regions(tape, v.pool_W, v.pool_b, features);
  const auto steps = sentence_rnn_forward(tape, v, pooled, S_count, cfg.max_sentences);

  std::vector<Var<S>> stop_terms;
  stop_terms.reserve(steps.size());
  for (int i = 0; i < S_count; ++i)
    stop_terms.push_back(binary_cross_entropy_logit(steps[static_cast<std::size_t>(i)].stop_logit,
                                                    i == S_count - 1));

  std::vector<Var<S>> word_terms;
  std::vector<Var<S>> all_logits;
  std::vector<int> all_targets;
  for (int i = 0; i < S_count; ++i) {
    std::vector<int> targets = y.sentences[static_cast<std::size_t>(i)];
    targets.push_back(Vocabulary::kEnd);
    const auto logits = word_logits(tape, v.word, steps[static_cast<std::size_t>(i)].topic,
                                    targets, cfg.vocab_size);
    for (std::size_t j = 0; j < logits.size(); ++j) {
      word_terms.push_back(softmax_cross_entropy(logits[j], targets[j]));
      all_logits.push_back(logits[j]);
      all_targets.push_back(targets[j]);
    }
  }

  auto out = detail::assemble_loss(cfg, add_all(stop_terms), stop_terms.size(),
                                   add_all(word_terms), word_terms.size());
  out.logits = std::move(all_logits);
  out.targets = std::move(all_targets);
  return out;
}

// Paragraph as one token stream for the flat decoder: each sentence followed
// by the end token, the whole stream closed with the paragraph-end token.
std::vector<int> flatten_with_markers(const EncodedParagraph& y);

// Flat baseline loss: the pooled vector conditions a single word-LSTM decode
// of the flattened stream. No stop head; the paragraph-end token carries the
// halting signal.
template <typename S>
ParagraphLoss<S> flat_loss(Tape<S>& tape, const FlatVars<S>& v, const ModelConfig& cfg,
                           const Eigen::MatrixXf& features, const EncodedParagraph& y) {
  detail::check_paragraph(y, cfg);
  const std::vector<int> targets = flatten_with_markers(y);
  Var<S> pooled = pool_regions(tape, v.pool_W, v.pool_b, features);
  const auto logits = word_logits(tape, v.word, pooled, targets, cfg.vocab_size);
  std::vector<Var<S>> word_terms;
  word_terms.reserve(targets.size());
  for (std::size_t j = 0; j < logits.size(); ++j)
    word_terms.push_back(softmax_cross_entropy(logits[j], targets[j]));
  auto out = detail::assemble_loss(cfg, tape.scalar(S(0)), 0, add_all(word_terms),
                                   word_terms.size());
  out.logits = logits;
  out.targets = targets;
  return out;
}

// Caption language model loss: one sentence, decoded exactly like a
// hierarchical sentence but conditioned on the pooled regions directly.
template <typename S>
ParagraphLoss<S> caption_loss(Tape<S>& tape, const FlatVars<S>& v, const ModelConfig& cfg,
                              const Eigen::MatrixXf& features, const std::vector<int>& sentence) {
  if (sentence.empty()) throw ShapeError("caption_loss: empty caption");
  if (static_cast<int>(sentence.size()) > cfg.max_words)
    throw ShapeError("caption_loss: caption of " + std::to_string(sentence.size()) +
                     " tokens exceeds the cap of " + std::to_string(cfg.max_words));
  std::vector<int> targets = sentence;
  targets.push_back(Vocabulary::kEnd);
  Var<S> pooled = pool_regions(tape, v.pool_W, v.pool_b, features);
  const auto logits = word_logits(tape, v.word, pooled, targets, cfg.vocab_size);
  std::vector<Var<S>> word_terms;
  word_terms.reserve(targets.size());
  for (std::size_t j = 0; j < logits.size(); ++j)
    word_terms.push_back(softmax_cross_entropy(logits[j], targets[j]));
  auto out = detail::assemble_loss(cfg, tape.scalar(S(0)), 0, add_all(word_terms),
                                   word_terms.size());
  out.logits = logits;
  out.targets = targets;
  return out;
}

}  // namespace paragen
