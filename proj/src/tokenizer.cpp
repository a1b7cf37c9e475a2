// Copyright (c) 2026 paragen contributors
// SPDX-License-Identifier: Apache-2.0

#include "paragen/tokenizer.hpp"

namespace paragen {

namespace {

bool is_word_char(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c >= 0x80;
}

bool is_terminator(const std::string& tok) {
  return tok == "." || tok == "!" || tok == "?";
}

}  // namespace

TokenizedParagraph tokenize(const std::string& text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    unsigned char c = static_cast<unsigned char>(text[i]);
    if (c >= 'A' && c <= 'Z') c = static_cast<unsigned char>(c - 'A' + 'a');
    if (c <= ' ' || c == 0x7f) {  // whitespace and control bytes separate tokens
      ++i;
      continue;
    }
    if (is_word_char(c)) {
      std::string tok;
      while (i < text.size()) {
        unsigned char w = static_cast<unsigned char>(text[i]);
        if (w >= 'A' && w <= 'Z') w = static_cast<unsigned char>(w - 'A' + 'a');
        if (!is_word_char(w)) break;
        tok.push_back(static_cast<char>(w));
        ++i;
      }
      tokens.push_back(std::move(tok));
    } else {
      tokens.push_back(std::string(1, static_cast<char>(c)));
      ++i;
    }
  }
  if (tokens.empty()) throw Error("tokenize: no tokens in text");

  TokenizedParagraph out;
  std::vector<std::string> sentence;
  for (std::string& tok : tokens) {
    const bool ends = is_terminator(tok);
    sentence.push_back(std::move(tok));
    if (ends) {
      out.sentences.push_back(std::move(sentence));
      sentence.clear();
    }
  }
  if (!sentence.empty()) out.sentences.push_back(std::move(sentence));
  return out;
}

std::string detokenize(const TokenizedParagraph& p) {
  std::string out;
  for (const auto& sentence : p.sentences)
    for (const auto& tok : sentence) {
      if (!out.empty()) out.push_back(' ');
      out += tok;
    }
  return out;
}

std::vector<std::string> flatten_tokens(const TokenizedParagraph& p) {
  std::vector<std::string> out;
  for (const auto& sentence : p.sentences) out.insert(out.end(), sentence.begin(), sentence.end());
  return out;
}

std::size_t token_count(const TokenizedParagraph& p) {
  std::size_t n = 0;
  for (const auto& sentence : p.sentences) n += sentence.size();
  return n;
}

}  // namespace paragen
