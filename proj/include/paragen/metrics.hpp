// Copyright (c) 2026 paragen contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "paragen/tokenizer.hpp"

namespace paragen {

using TokenSeq = std::vector<std::string>;

// BLEU-1..4 for one candidate against its references: clipped n-gram
// precision, geometric mean over orders 1..n, brevity penalty against the
// closest reference length (ties to the shorter). Zero precisions are
// smoothed with 1e-9. Returns values in [0, 1].
std::array<double, 4> bleu(const TokenSeq& candidate, const std::vector<TokenSeq>& references);

// Corpus-level BLEU: counts pool across segments before the ratio is taken.
class BleuAccumulator {
 public:
  void add(const TokenSeq& candidate, const std::vector<TokenSeq>& references);
  std::array<double, 4> scores() const;
  std::size_t segments() const { return segments_; }

 private:
  std::array<long, 4> matched_{};
  std::array<long, 4> total_{};
  long candidate_len_ = 0;
  long reference_len_ = 0;
  std::size_t segments_ = 0;
};

// Smoothed inverse document frequencies for n-grams of order 1..4, built from
// a reference corpus. An n-gram never seen in the corpus gets ln(N), the
// weight of a single-document term.
class IdfTable {
 public:
  static IdfTable build(const std::vector<TokenSeq>& documents);

  double idf(int n, const TokenSeq& gram) const;
  double unseen_idf() const;
  std::size_t num_documents() const { return num_docs_; }

  // Same table with every weight multiplied by k. Cosine similarity is scale
  // invariant per order, so scores built from a scaled table are unchanged.
  IdfTable scaled(double k) const;

 private:
  std::array<std::map<TokenSeq, double>, 4> idf_;
  std::size_t num_docs_ = 0;
  double unseen_ = 0.0;
};

// Consensus similarity: mean over n = 1..4 of the cosine between tf-idf
// weighted n-gram count vectors, averaged over references, with a Gaussian
// penalty on the length difference (sigma 6). Scaled to [0, 100]. A zero-norm
// side yields zero cosine for that order.
double cider(const TokenSeq& candidate, const std::vector<TokenSeq>& references,
             const IdfTable& idf);

// 100 minus the mean pairwise consensus similarity over ordered sentence
// pairs. Identical sentences give 0, fully disjoint ones 100. Needs at least
// two sentences; otherwise the value is undefined.
std::optional<double> diversity(const std::vector<TokenSeq>& sentences, const IdfTable& idf);

struct CorpusStats {
  std::size_t paragraphs = 0;
  std::size_t sentences = 0;
  double avg_tokens_per_paragraph = 0.0;
  double std_tokens_per_paragraph = 0.0;
  double avg_tokens_per_sentence = 0.0;
  std::size_t vocab_size = 0;  // distinct token strings
  std::optional<double> mean_diversity;  // over multi-sentence paragraphs
  std::size_t diversity_skipped = 0;     // single-sentence paragraphs
};

// Descriptive statistics of a paragraph set. The diversity idf corpus is the
// set's own sentences.
CorpusStats corpus_stats(const std::vector<TokenizedParagraph>& paragraphs);

struct ScoreReport {
  std::array<double, 4> bleu{};  // corpus level, [0, 1]
  double mean_cider = 0.0;       // mean per-paragraph score, [0, 100]
  CorpusStats prediction_stats;
  std::size_t scored = 0;

  std::string table() const;  // aligned text, BLEU shown x100
};

// Scores predictions against aligned references. CIDEr idf comes from the
// reference paragraphs; prediction_stats (including diversity) describes the
// predictions themselves.
ScoreReport score_predictions(const std::vector<TokenizedParagraph>& predictions,
                              const std::vector<TokenizedParagraph>& references);

}  // namespace paragen
