// Copyright (c) 2026 paragen contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "paragen/tokenizer.hpp"

namespace paragen {

// A paragraph as sentences of vocabulary ids.
struct EncodedParagraph {
  std::vector<std::vector<int>> sentences;

  bool operator==(const EncodedParagraph&) const = default;
};

// Token table with five reserved ids at the front. Ids are dense; encode maps
// unknown tokens to UNK, decode of an out-of-range id throws.
class Vocabulary {
 public:
  static constexpr int kStart = 0;  // sequence start marker, never a target
  static constexpr int kEnd = 1;    // "<eos>": sentence terminator
  static constexpr int kUnk = 2;
  static constexpr int kPad = 3;
  static constexpr int kEop = 4;  // paragraph terminator in flattened streams
  static constexpr int kNumSpecial = 5;

  // Specials only.
  Vocabulary();

  // Full table, e.g. from a checkpoint. The first five entries must be the
  // special tokens in their fixed order; duplicates are an error.
  explicit Vocabulary(std::vector<std::string> tokens);

  int size() const { return static_cast<int>(tokens_.size()); }

  int encode(const std::string& token) const;
  std::optional<int> find(const std::string& token) const;  // no UNK fallback
  const std::string& decode(int id) const;
  const std::vector<std::string>& tokens() const { return tokens_; }

  EncodedParagraph encode(const TokenizedParagraph& p) const;
  TokenizedParagraph decode(const std::vector<std::vector<int>>& sentences) const;

  bool operator==(const Vocabulary& o) const { return tokens_ == o.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
};

// Counts tokens over the corpus, keeps those occurring at least min_count
// times, and assigns ids after the specials in order of descending count with
// ties broken alphabetically. Deterministic for a given corpus.
Vocabulary build_vocab(const std::vector<TokenizedParagraph>& corpus, int min_count);

}  // namespace paragen
