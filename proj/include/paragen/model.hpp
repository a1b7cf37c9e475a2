// Copyright (c) 2026 paragen contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <utility>
#include <vector>

#include "paragen/lstm.hpp"
#include "paragen/param_set.hpp"
#include "paragen/rng.hpp"
#include "paragen/vocab.hpp"

namespace paragen {

// Three decoder layouts share one parameter naming scheme:
//   hierarchical  region pooling, a sentence LSTM emitting a stop decision
//                 and a topic per sentence, and a two-layer word LSTM
//                 decoding each sentence from its topic
//   flat          region pooling feeding the word LSTM once, which decodes
//                 the whole paragraph as a single token stream
//   caption_lm    the flat layout trained on single-sentence captions
// flat and caption_lm share shapes; the kind is recorded so checkpoints are
// not interchangeable by accident.
enum class ModelKind { hierarchical, flat, caption_lm };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& s);

struct ModelConfig {
  int region_dim = 64;   // incoming feature width per region
  int pool_dim = 32;     // pooled scene vector width
  int hidden_dim = 32;   // LSTM hidden width, sentence and word level
  int embed_dim = 32;    // word embedding width
  int vocab_size = 0;    // set from data
  int max_sentences = 6;
  int max_words = 20;    // per sentence (per paragraph stream: see flat cap)
  double stop_threshold = 0.5;  // halt when P(stop) exceeds this
  double lambda_sentence = 5.0;
  double lambda_word = 1.0;

  // Desk-sized defaults, quick enough to train in tests.
  static ModelConfig desk() { return ModelConfig{}; }

  // Dimensions used at full scale: 4096-dim regions pooled to 1024, hidden
  // and embedding width 512, six sentences of up to 50 words.
  static ModelConfig full_scale() {
    ModelConfig c;
    c.region_dim = 4096;
    c.pool_dim = 1024;
    c.hidden_dim = 512;
    c.embed_dim = 512;
    c.max_sentences = 6;
    c.max_words = 50;
    return c;
  }

  void validate() const {
    if (region_dim < 1 || pool_dim < 1 || hidden_dim < 1 || embed_dim < 1)
      throw ConfigError("model: dimensions must be >= 1");
    if (vocab_size < Vocabulary::kNumSpecial)
      throw ConfigError("model: vocab_size must cover the reserved tokens");
    if (max_sentences < 1 || max_words < 1)
      throw ConfigError("model: max_sentences and max_words must be >= 1");
    if (!(stop_threshold > 0.0 && stop_threshold < 1.0))
      throw ConfigError("model: stop_threshold must lie in (0, 1)");
    if (lambda_sentence < 0.0 || lambda_word < 0.0)
      throw ConfigError("model: loss weights must be >= 0");
  }
};

// Expected tensor names and shapes for a kind, in serialization order.
std::vector<std::pair<std::string, std::pair<Index, Index>>> param_shapes(
    ModelKind kind, const ModelConfig& cfg);

// Fresh parameters: weights uniform in +-1/sqrt(fan_in), biases zero except
// LSTM forget gates at one, and the topic projection starting as identity
// when the widths already agree.
ParamSet<double> init_params(ModelKind kind, const ModelConfig& cfg, Rng& rng);

// Leaf bundles the graph builders work from, bound per tape.

template <typename S>
struct WordStackVars {  // shared by all kinds
  Var<S> tproj_W, tproj_b;  // conditioning vector (pool_dim) -> embed_dim
  Var<S> embed;             // vocab x embed
  LstmVars<S> l0, l1;
  Var<S> out_W, out_b;  // hidden -> vocab logits
};

template <typename S>
struct HierVars {
  Var<S> pool_W, pool_b;
  LstmVars<S> sent;
  Var<S> stop_w, stop_b;
  Var<S> topic_W1, topic_b1, topic_W2, topic_b2;
  WordStackVars<S> word;
};

template <typename S>
struct FlatVars {
  Var<S> pool_W, pool_b;
  WordStackVars<S> word;
};

template <typename S>
WordStackVars<S> bind_word_stack(const ParamLeaves<S>& leaves) {
  WordStackVars<S> w;
  w.tproj_W = leaves["topic_proj.W"];
  w.tproj_b = leaves["topic_proj.b"];
  w.embed = leaves["embed.W"];
  w.l0 = {leaves["word_rnn.l0.W"], leaves["word_rnn.l0.b"]};
  w.l1 = {leaves["word_rnn.l1.W"], leaves["word_rnn.l1.b"]};
  w.out_W = leaves["out.W"];
  w.out_b = leaves["out.b"];
  return w;
}

template <typename S>
HierVars<S> bind_hier(const ParamLeaves<S>& leaves) {
  HierVars<S> v;
  v.pool_W = leaves["pool.W"];
  v.pool_b = leaves["pool.b"];
  v.sent = {leaves["sent_rnn.W"], leaves["sent_rnn.b"]};
  v.stop_w = leaves["stop.w"];
  v.stop_b = leaves["stop.b"];
  v.topic_W1 = leaves["topic.W1"];
  v.topic_b1 = leaves["topic.b1"];
  v.topic_W2 = leaves["topic.W2"];
  v.topic_b2 = leaves["topic.b2"];
  v.word = bind_word_stack(leaves);
  return v;
}

template <typename S>
FlatVars<S> bind_flat(const ParamLeaves<S>& leaves) {
  FlatVars<S> v;
  v.pool_W = leaves["pool.W"];
  v.pool_b = leaves["pool.b"];
  v.word = bind_word_stack(leaves);
  return v;
}

}  // namespace paragen
