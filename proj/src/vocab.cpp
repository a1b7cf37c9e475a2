// Copyright (c) 2026 paragen contributors
// SPDX-License-Identifier: Apache-2.0

#include "paragen/vocab.hpp"

#include <algorithm>
#include <map>

#include "paragen/errors.hpp"

namespace paragen {

namespace {

const std::vector<std::string>& special_tokens() {
  static const std::vector<std::string> kSpecials = {"<start>", "<eos>", "<unk>", "<pad>",
                                                     "<eop>"};
  return kSpecials;
}

}  // namespace

Vocabulary::Vocabulary() : Vocabulary(special_tokens()) {}

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  const auto& specials = special_tokens();
  if (tokens_.size() < specials.size())
    throw Error("Vocabulary: table smaller than the reserved prefix");
  for (std::size_t i = 0; i < specials.size(); ++i)
    if (tokens_[i] != specials[i])
      throw Error("Vocabulary: slot " + std::to_string(i) + " must be " + specials[i] +
                  ", got " + tokens_[i]);
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!ids_.emplace(tokens_[i], static_cast<int>(i)).second)
      throw Error("Vocabulary: duplicate token " + tokens_[i]);
  }
}

int Vocabulary::encode(const std::string& token) const {
  auto it = ids_.find(token);
  return it == ids_.end() ? kUnk : it->second;
}

std::optional<int> Vocabulary::find(const std::string& token) const {
  auto it = ids_.find(token);
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

const std::string& Vocabulary::decode(int id) const {
  if (id < 0 || id >= size())
    throw Error("Vocabulary: id " + std::to_string(id) + " outside [0, " + std::to_string(size()) +
                ")");
  return tokens_[static_cast<std::size_t>(id)];
}

EncodedParagraph Vocabulary::encode(const TokenizedParagraph& p) const {
  EncodedParagraph out;
  out.sentences.reserve(p.sentences.size());
  for (const auto& sentence : p.sentences) {
    std::vector<int> ids;
    ids.reserve(sentence.size());
    for (const auto& tok : sentence) ids.push_back(encode(tok));
    out.sentences.push_back(std::move(ids));
  }
  return out;
}

TokenizedParagraph Vocabulary::decode(const std::vector<std::vector<int>>& sentences) const {
  TokenizedParagraph out;
  out.sentences.reserve(sentences.size());
  for (const auto& ids : sentences) {
    std::vector<std::string> toks;
    toks.reserve(ids.size());
    for (int id : ids) toks.push_back(decode(id));
    out.sentences.push_back(std::move(toks));
  }
  return out;
}

Vocabulary build_vocab(const std::vector<TokenizedParagraph>& corpus, int min_count) {
  if (min_count < 1) throw ConfigError("build_vocab: min_count must be >= 1");
  if (corpus.empty()) throw Error("build_vocab: empty corpus");
  // std::map keeps ties resolvable alphabetically without a second sort key pass.
  std::map<std::string, long> counts;
  for (const auto& p : corpus)
    for (const auto& sentence : p.sentences)
      for (const auto& tok : sentence) ++counts[tok];

  std::vector<std::pair<std::string, long>> kept;
  for (const auto& [tok, n] : counts)
    if (n >= min_count) kept.emplace_back(tok, n);
  std::stable_sort(kept.begin(), kept.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });

  std::vector<std::string> tokens = {"<start>", "<eos>", "<unk>", "<pad>", "<eop>"};
  tokens.reserve(tokens.size() + kept.size());
  for (auto& [tok, n] : kept) tokens.push_back(std::move(tok));
  return Vocabulary(std::move(tokens));
}

}  // namespace paragen
