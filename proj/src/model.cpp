// Copyright (c) 2026 paragen contributors
// SPDX-License-Identifier: Apache-2.0

#include "paragen/model.hpp"

#include "paragen/forward.hpp"

namespace paragen {

std::vector<int> flatten_with_markers(const EncodedParagraph& y) {
  std::vector<int> out;
  for (const auto& sentence : y.sentences) {
    out.insert(out.end(), sentence.begin(), sentence.end());
    out.push_back(Vocabulary::kEnd);
  }
  out.push_back(Vocabulary::kEop);
  return out;
}

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::hierarchical: return "hierarchical";
    case ModelKind::flat: return "flat";
    case ModelKind::caption_lm: return "caption_lm";
  }
  throw Error("unknown model kind");
}

ModelKind model_kind_from_string(const std::string& s) {
  if (s == "hierarchical") return ModelKind::hierarchical;
  if (s == "flat") return ModelKind::flat;
  if (s == "caption_lm") return ModelKind::caption_lm;
  throw ConfigError("unknown model kind " + s);
}

std::vector<std::pair<std::string, std::pair<Index, Index>>> param_shapes(
    ModelKind kind, const ModelConfig& cfg) {
  cfg.validate();
  const Index D = cfg.region_dim, P = cfg.pool_dim, H = cfg.hidden_dim, E = cfg.embed_dim,
              V = cfg.vocab_size;
  std::vector<std::pair<std::string, std::pair<Index, Index>>> shapes;
  shapes.emplace_back("pool.W", std::make_pair(P, D));
  shapes.emplace_back("pool.b", std::make_pair(P, Index(1)));
  if (kind == ModelKind::hierarchical) {
    shapes.emplace_back("sent_rnn.W", std::make_pair(4 * H, P + H));
    shapes.emplace_back("sent_rnn.b", std::make_pair(4 * H, Index(1)));
    shapes.emplace_back("stop.w", std::make_pair(Index(1), H));
    shapes.emplace_back("stop.b", std::make_pair(Index(1), Index(1)));
    shapes.emplace_back("topic.W1", std::make_pair(H, H));
    shapes.emplace_back("topic.b1", std::make_pair(H, Index(1)));
    shapes.emplace_back("topic.W2", std::make_pair(P, H));
    shapes.emplace_back("topic.b2", std::make_pair(P, Index(1)));
  }
  shapes.emplace_back("topic_proj.W", std::make_pair(E, P));
  shapes.emplace_back("topic_proj.b", std::make_pair(E, Index(1)));
  shapes.emplace_back("embed.W", std::make_pair(V, E));
  shapes.emplace_back("word_rnn.l0.W", std::make_pair(4 * H, E + H));
  shapes.emplace_back("word_rnn.l0.b", std::make_pair(4 * H, Index(1)));
  shapes.emplace_back("word_rnn.l1.W", std::make_pair(4 * H, H + H));
  shapes.emplace_back("word_rnn.l1.b", std::make_pair(4 * H, Index(1)));
  shapes.emplace_back("out.W", std::make_pair(V, H));
  shapes.emplace_back("out.b", std::make_pair(V, Index(1)));
  return shapes;
}

namespace {

// Row-major fill so a tensor's draw order is its storage order on disk.
Mat<double> uniform_fan_in(Index rows, Index cols, Index fan_in, Rng& rng) {
  const double s = 1.0 / std::sqrt(static_cast<double>(fan_in));
  Mat<double> m(rows, cols);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) m(r, c) = rng.uniform(-s, s);
  return m;
}

Mat<double> lstm_bias(Index hidden) {
  Mat<double> b = Mat<double>::Zero(4 * hidden, 1);
  b.middleRows(hidden, hidden).setConstant(1.0);  // forget gate starts open
  return b;
}

}  // namespace

ParamSet<double> init_params(ModelKind kind, const ModelConfig& cfg, Rng& rng) {
  const Index D = cfg.region_dim, P = cfg.pool_dim, H = cfg.hidden_dim, E = cfg.embed_dim;
  const auto shapes = param_shapes(kind, cfg);
  ParamSet<double> params;
  for (const auto& [name, shape] : shapes) {
    const auto [rows, cols] = shape;
    if (name == "pool.W") {
      params.add(name, uniform_fan_in(rows, cols, D, rng));
    } else if (name == "sent_rnn.W") {
      params.add(name, uniform_fan_in(rows, cols, P + H, rng));
    } else if (name == "sent_rnn.b" || name == "word_rnn.l0.b" || name == "word_rnn.l1.b") {
      params.add(name, lstm_bias(H));
    } else if (name == "stop.w" || name == "topic.W1" || name == "topic.W2" ||
               name == "out.W") {
      params.add(name, uniform_fan_in(rows, cols, H, rng));
    } else if (name == "topic_proj.W") {
      params.add(name, E == P ? Mat<double>(Mat<double>::Identity(E, P))
                              : uniform_fan_in(rows, cols, P, rng));
    } else if (name == "embed.W") {
      params.add(name, uniform_fan_in(rows, cols, E, rng));
    } else if (name == "word_rnn.l0.W") {
      params.add(name, uniform_fan_in(rows, cols, E + H, rng));
    } else if (name == "word_rnn.l1.W") {
      params.add(name, uniform_fan_in(rows, cols, H + H, rng));
    } else {
      params.add(name, Mat<double>::Zero(rows, cols));  // remaining biases
    }
  }
  return params;
}

}  // namespace paragen
