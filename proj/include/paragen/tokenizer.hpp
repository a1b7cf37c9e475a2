// Copyright (c) 2026 paragen contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "paragen/errors.hpp"

namespace paragen {

// A paragraph as sentences of lowercase tokens.
struct TokenizedParagraph {
  std::vector<std::vector<std::string>> sentences;

  bool operator==(const TokenizedParagraph&) const = default;
};

// Lowercases, splits tokens, then splits sentences after '.', '!' or '?'.
// Token characters are a-z, 0-9 and any byte >= 0x80; every other printable
// character becomes a single-character token. A trailing run with no
// terminator still forms a sentence; empty sentences are dropped. Throws on
// text with no tokens at all. Idempotent: retokenizing the detokenized form
// gives the same result.
TokenizedParagraph tokenize(const std::string& text);

// Joins all tokens with single spaces, sentences in order.
std::string detokenize(const TokenizedParagraph& p);

std::vector<std::string> flatten_tokens(const TokenizedParagraph& p);

std::size_t token_count(const TokenizedParagraph& p);

}  // namespace paragen
