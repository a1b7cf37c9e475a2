// Copyright (c) 2026 paragen contributors
// SPDX-License-Identifier: Apache-2.0

#include "paragen/transfer.hpp"

namespace paragen {

VocabMapping VocabMapping::build(const Vocabulary& target, const Vocabulary& source) {
  VocabMapping m;
  m.target_to_source.reserve(static_cast<std::size_t>(target.size()));
  for (int id = 0; id < target.size(); ++id) {
    const auto src = source.find(target.decode(id));
    m.target_to_source.push_back(src ? *src : -1);
  }
  return m;
}

std::size_t VocabMapping::shared() const {
  std::size_t n = 0;
  for (int id : target_to_source)
    if (id >= 0) ++n;
  return n;
}

void transfer_init(ParamSet<double>& target_params, const ModelConfig& target_cfg,
                   const Vocabulary& target_vocab, const Checkpoint& source,
                   const VocabMapping& mapping) {
  const ModelConfig& src_cfg = source.config;
  if (src_cfg.hidden_dim != target_cfg.hidden_dim)
    throw Error("transfer_init: hidden width " + std::to_string(src_cfg.hidden_dim) +
                " != target " + std::to_string(target_cfg.hidden_dim));
  if (src_cfg.embed_dim != target_cfg.embed_dim)
    throw Error("transfer_init: embedding width " + std::to_string(src_cfg.embed_dim) +
                " != target " + std::to_string(target_cfg.embed_dim));
  if (static_cast<int>(mapping.target_to_source.size()) != target_vocab.size())
    throw Error("transfer_init: mapping covers " +
                std::to_string(mapping.target_to_source.size()) + " ids, target vocab has " +
                std::to_string(target_vocab.size()));
  if (target_vocab.size() != target_cfg.vocab_size)
    throw Error("transfer_init: target vocab does not match target config");
  for (int src : mapping.target_to_source)
    if (src >= src_cfg.vocab_size)
      throw Error("transfer_init: mapping points past the source vocabulary");

  // LSTM layers carry over verbatim; widths were checked above.
  target_params.at("word_rnn.l0.W") = source.params.at("word_rnn.l0.W");
  target_params.at("word_rnn.l0.b") = source.params.at("word_rnn.l0.b");
  target_params.at("word_rnn.l1.W") = source.params.at("word_rnn.l1.W");
  target_params.at("word_rnn.l1.b") = source.params.at("word_rnn.l1.b");

  const Mat<double>& src_embed = source.params.at("embed.W");
  const Mat<double>& src_out_W = source.params.at("out.W");
  const Mat<double>& src_out_b = source.params.at("out.b");
  Mat<double>& dst_embed = target_params.at("embed.W");
  Mat<double>& dst_out_W = target_params.at("out.W");
  Mat<double>& dst_out_b = target_params.at("out.b");
  for (int id = 0; id < target_vocab.size(); ++id) {
    const int raw = mapping.target_to_source[static_cast<std::size_t>(id)];
    // Tokens the source never saw get its unknown-token row.
    const int src = raw >= 0 ? raw : Vocabulary::kUnk;
    dst_embed.row(id) = src_embed.row(src);
    dst_out_W.row(id) = src_out_W.row(src);
    dst_out_b(id, 0) = src_out_b(src, 0);
  }

  // The topic projection depends on the conditioning width, which the target
  // may have changed; transfer only an exact shape match.
  const Mat<double>& src_tp = source.params.at("topic_proj.W");
  Mat<double>& dst_tp = target_params.at("topic_proj.W");
  if (src_tp.rows() == dst_tp.rows() && src_tp.cols() == dst_tp.cols()) {
    dst_tp = src_tp;
    target_params.at("topic_proj.b") = source.params.at("topic_proj.b");
  }
}

}  // namespace paragen
