// Copyright (c) 2026 paragen contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "paragen/checkpoint.hpp"

namespace paragen {

// Maps each target vocabulary id to its source id, or to -1 when the token
// is absent from the source.
struct VocabMapping {
  std::vector<int> target_to_source;

  static VocabMapping build(const Vocabulary& target, const Vocabulary& source);

  std::size_t shared() const;  // ids with a source counterpart
};

// Copies the word-decoder stack (topic projection, embedding, both word LSTM
// layers, output head) from a source checkpoint into freshly initialized
// target parameters. Vocabulary rows follow the mapping: a shared token takes
// its source row, an absent one takes the source UNK row. Requires matching
// hidden and embedding widths; the topic projection transfers only when the
// source pool width matches too. Everything outside the word stack is left
// untouched. Applying the same transfer twice is a no-op.
void transfer_init(ParamSet<double>& target_params, const ModelConfig& target_cfg,
                   const Vocabulary& target_vocab, const Checkpoint& source,
                   const VocabMapping& mapping);

}  // namespace paragen
