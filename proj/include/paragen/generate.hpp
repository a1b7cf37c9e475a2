// Copyright (c) 2026 paragen contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "paragen/forward.hpp"

namespace paragen {

struct GenerationResult {
  std::vector<std::vector<int>> sentences;  // token ids, markers stripped
  std::vector<double> stop_probs;           // hierarchical only, one per sentence
};

namespace detail {

// Greedy pick; ties go to the lowest id so decoding is order independent.
template <typename S>
int argmax_token(const Mat<S>& logits) {
  Index best = 0;
  for (Index r = 1; r < logits.rows(); ++r)
    if (logits(r, 0) > logits(best, 0)) best = r;
  return static_cast<int>(best);
}

template <typename S>
double stable_sigmoid(S z) {
  const double x = static_cast<double>(z);
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

// Decodes one sentence greedily from a conditioning vector until the end
// token or the word cap.
template <typename S>
std::vector<int> decode_sentence(Tape<S>& tape, const WordStackVars<S>& w, Var<S> conditioning,
                                 int max_words) {
  WordState<S> state = word_zero_state(tape, w.l0.W.rows() / 4);
  Var<S> x = add(matmul(w.tproj_W, conditioning), w.tproj_b);
  word_step(w, state, x);
  x = embedding_lookup(w.embed, Vocabulary::kStart);
  std::vector<int> tokens;
  while (static_cast<int>(tokens.size()) < max_words) {
    const Var<S> logits = word_step(w, state, x);
    const int tok = argmax_token(logits.value());
    if (tok == Vocabulary::kEnd) break;
    tokens.push_back(tok);
    x = embedding_lookup(w.embed, tok);
  }
  return tokens;
}

}  // namespace detail

// Hierarchical decoding: pool the regions, then per sentence step emit a
// stop probability and decode one sentence from its topic. The sentence
// produced at a step is kept even when that step decides to stop, so every
// output has at least one sentence. top_k pools only the first k regions.
template <typename S>
GenerationResult generate(const ParamSet<S>& params, const ModelConfig& cfg,
                          const Eigen::MatrixXf& features, int top_k = 0) {
  cfg.validate();
  Tape<S> tape;
  ParamLeaves<S> leaves(tape, params);
  const HierVars<S> v = bind_hier(leaves);
  Var<S> pooled = pool_regions(tape, v.pool_W, v.pool_b, features, top_k);

  GenerationResult result;
  LstmState<S> state = zero_state(tape, v.sent.W.rows() / 4);
  for (int i = 0; i < cfg.max_sentences; ++i) {
    state = lstm_cell(pooled, state, v.sent);
    const Var<S> stop_logit = add(matmul(v.stop_w, state.h), v.stop_b);
    const double p_stop = detail::stable_sigmoid(stop_logit.scalar());
    const Var<S> topic =
        add(matmul(v.topic_W2, relu(add(matmul(v.topic_W1, state.h), v.topic_b1))), v.topic_b2);
    result.sentences.push_back(detail::decode_sentence(tape, v.word, topic, cfg.max_words));
    result.stop_probs.push_back(p_stop);
    if (p_stop > cfg.stop_threshold) break;
  }
  return result;
}

// Flat decoding: one greedy stream split at end tokens, closed by the
// paragraph-end token or the total word cap. Empty sentences are dropped.
template <typename S>
GenerationResult flat_generate(const ParamSet<S>& params, const ModelConfig& cfg,
                               const Eigen::MatrixXf& features, int top_k = 0) {
  cfg.validate();
  Tape<S> tape;
  ParamLeaves<S> leaves(tape, params);
  const FlatVars<S> v = bind_flat(leaves);
  Var<S> pooled = pool_regions(tape, v.pool_W, v.pool_b, features, top_k);

  WordState<S> state = word_zero_state(tape, v.word.l0.W.rows() / 4);
  Var<S> x = add(matmul(v.word.tproj_W, pooled), v.word.tproj_b);
  word_step(v.word, state, x);
  x = embedding_lookup(v.word.embed, Vocabulary::kStart);

  GenerationResult result;
  std::vector<int> sentence;
  const int cap = cfg.max_sentences * cfg.max_words;
  for (int t = 0; t < cap; ++t) {
    const Var<S> logits = word_step(v.word, state, x);
    const int tok = detail::argmax_token(logits.value());
    if (tok == Vocabulary::kEop) break;
    if (tok == Vocabulary::kEnd) {
      if (!sentence.empty()) result.sentences.push_back(std::move(sentence));
      sentence.clear();
    } else {
      sentence.push_back(tok);
    }
    x = embedding_lookup(v.word.embed, tok);
  }
  if (!sentence.empty()) result.sentences.push_back(std::move(sentence));
  return result;
}

}  // namespace paragen
