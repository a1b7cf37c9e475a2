// Copyright (c) 2026 paragen contributors
// SPDX-License-Identifier: Apache-2.0

#include "paragen/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "paragen/errors.hpp"

namespace paragen {

namespace {

constexpr double kBleuSmoothing = 1e-9;
constexpr double kCiderSigma = 6.0;
constexpr int kMaxOrder = 4;

using GramCounts = std::map<TokenSeq, long>;

GramCounts ngram_counts(const TokenSeq& tokens, int n) {
  GramCounts counts;
  if (static_cast<int>(tokens.size()) < n) return counts;
  for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= tokens.size(); ++i)
    ++counts[TokenSeq(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                      tokens.begin() + static_cast<std::ptrdiff_t>(i) + n)];
  return counts;
}

// Clipped matches for one candidate against the per-reference maximum.
void bleu_tally(const TokenSeq& cand, const std::vector<TokenSeq>& refs, int n, long& matched,
                long& total) {
  const GramCounts cand_counts = ngram_counts(cand, n);
  GramCounts max_ref;
  for (const TokenSeq& ref : refs)
    for (const auto& [gram, count] : ngram_counts(ref, n)) {
      long& slot = max_ref[gram];
      slot = std::max(slot, count);
    }
  for (const auto& [gram, count] : cand_counts) {
    auto it = max_ref.find(gram);
    matched += it == max_ref.end() ? 0 : std::min(count, it->second);
    total += count;
  }
}

// Reference length closest to the candidate's, ties to the shorter.
long closest_ref_length(std::size_t cand_len, const std::vector<TokenSeq>& refs) {
  long best = static_cast<long>(refs[0].size());
  for (const TokenSeq& ref : refs) {
    const long len = static_cast<long>(ref.size());
    const long cl = static_cast<long>(cand_len);
    if (std::abs(len - cl) < std::abs(best - cl) ||
        (std::abs(len - cl) == std::abs(best - cl) && len < best))
      best = len;
  }
  return best;
}

std::array<double, 4> bleu_from_stats(const std::array<long, 4>& matched,
                                      const std::array<long, 4>& total, long cand_len,
                                      long ref_len) {
  std::array<double, 4> out{};
  const double bp =
      cand_len >= ref_len
          ? 1.0
          : std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(cand_len));
  double log_sum = 0.0;
  for (int n = 0; n < kMaxOrder; ++n) {
    const double p = total[static_cast<std::size_t>(n)] == 0
                         ? kBleuSmoothing
                         : std::max(kBleuSmoothing,
                                    static_cast<double>(matched[static_cast<std::size_t>(n)]) /
                                        static_cast<double>(total[static_cast<std::size_t>(n)]));
    log_sum += std::log(p);
    out[static_cast<std::size_t>(n)] = bp * std::exp(log_sum / (n + 1));
  }
  return out;
}

void require_nonempty(const TokenSeq& cand, const std::vector<TokenSeq>& refs, const char* what) {
  if (cand.empty()) throw Error(std::string(what) + ": empty candidate");
  if (refs.empty()) throw Error(std::string(what) + ": no references");
  for (const TokenSeq& ref : refs)
    if (ref.empty()) throw Error(std::string(what) + ": empty reference");
}

}  // namespace

std::array<double, 4> bleu(const TokenSeq& candidate, const std::vector<TokenSeq>& references) {
  require_nonempty(candidate, references, "bleu");
  std::array<long, 4> matched{}, total{};
  for (int n = 1; n <= kMaxOrder; ++n)
    bleu_tally(candidate, references, n, matched[static_cast<std::size_t>(n - 1)],
               total[static_cast<std::size_t>(n - 1)]);
  return bleu_from_stats(matched, total, static_cast<long>(candidate.size()),
                         closest_ref_length(candidate.size(), references));
}

void BleuAccumulator::add(const TokenSeq& candidate, const std::vector<TokenSeq>& references) {
  require_nonempty(candidate, references, "bleu");
  for (int n = 1; n <= kMaxOrder; ++n)
    bleu_tally(candidate, references, n, matched_[static_cast<std::size_t>(n - 1)],
               total_[static_cast<std::size_t>(n - 1)]);
  candidate_len_ += static_cast<long>(candidate.size());
  reference_len_ += closest_ref_length(candidate.size(), references);
  ++segments_;
}

std::array<double, 4> BleuAccumulator::scores() const {
  if (segments_ == 0) throw Error("bleu: nothing accumulated");
  return bleu_from_stats(matched_, total_, candidate_len_, reference_len_);
}

IdfTable IdfTable::build(const std::vector<TokenSeq>& documents) {
  if (documents.empty()) throw Error("IdfTable: empty corpus");
  IdfTable table;
  table.num_docs_ = documents.size();
  const double n_docs = static_cast<double>(documents.size());
  table.unseen_ = std::log(n_docs);
  for (int n = 1; n <= kMaxOrder; ++n) {
    std::map<TokenSeq, long> df;
    for (const TokenSeq& doc : documents)
      for (const auto& [gram, count] : ngram_counts(doc, n)) ++df[gram];
    auto& slot = table.idf_[static_cast<std::size_t>(n - 1)];
    for (const auto& [gram, count] : df)
      slot[gram] = std::log(n_docs / static_cast<double>(count));
  }
  return table;
}

double IdfTable::idf(int n, const TokenSeq& gram) const {
  const auto& slot = idf_[static_cast<std::size_t>(n - 1)];
  auto it = slot.find(gram);
  return it == slot.end() ? unseen_ : it->second;
}

double IdfTable::unseen_idf() const { return unseen_; }

IdfTable IdfTable::scaled(double k) const {
  IdfTable out = *this;
  for (auto& slot : out.idf_)
    for (auto& [gram, w] : slot) w *= k;
  out.unseen_ *= k;
  return out;
}

namespace {

// Sparse tf-idf vector for one order plus its norm.
struct WeightedGrams {
  std::map<TokenSeq, double> w;
  double norm = 0.0;
};

WeightedGrams weight(const TokenSeq& tokens, int n, const IdfTable& idf) {
  WeightedGrams out;
  double sq = 0.0;
  for (const auto& [gram, count] : ngram_counts(tokens, n)) {
    const double v = static_cast<double>(count) * idf.idf(n, gram);
    out.w[gram] = v;
    sq += v * v;
  }
  out.norm = std::sqrt(sq);
  return out;
}

double cosine(const WeightedGrams& a, const WeightedGrams& b) {
  if (a.norm == 0.0 || b.norm == 0.0) return 0.0;
  double dot = 0.0;
  for (const auto& [gram, v] : a.w) {
    auto it = b.w.find(gram);
    if (it != b.w.end()) dot += v * it->second;
  }
  return dot / (a.norm * b.norm);
}

double consensus_similarity(const TokenSeq& cand, const TokenSeq& ref, const IdfTable& idf) {
  double sum = 0.0;
  for (int n = 1; n <= kMaxOrder; ++n)
    sum += cosine(weight(cand, n, idf), weight(ref, n, idf));
  const double len_diff = static_cast<double>(cand.size()) - static_cast<double>(ref.size());
  const double penalty = std::exp(-(len_diff * len_diff) / (2.0 * kCiderSigma * kCiderSigma));
  return 100.0 * penalty * sum / kMaxOrder;
}

}  // namespace

double cider(const TokenSeq& candidate, const std::vector<TokenSeq>& references,
             const IdfTable& idf) {
  require_nonempty(candidate, references, "cider");
  double sum = 0.0;
  for (const TokenSeq& ref : references) sum += consensus_similarity(candidate, ref, idf);
  return sum / static_cast<double>(references.size());
}

std::optional<double> diversity(const std::vector<TokenSeq>& sentences, const IdfTable& idf) {
  if (sentences.size() < 2) return std::nullopt;
  for (const TokenSeq& s : sentences)
    if (s.empty()) throw Error("diversity: empty sentence");
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < sentences.size(); ++i)
    for (std::size_t j = 0; j < sentences.size(); ++j) {
      if (i == j) continue;
      sum += consensus_similarity(sentences[i], sentences[j], idf);
      ++pairs;
    }
  return 100.0 - sum / static_cast<double>(pairs);
}

CorpusStats corpus_stats(const std::vector<TokenizedParagraph>& paragraphs) {
  if (paragraphs.empty()) throw Error("corpus_stats: no paragraphs");
  CorpusStats st;
  st.paragraphs = paragraphs.size();
  std::set<std::string> vocab;
  std::vector<double> lengths;
  double sentence_tokens = 0.0;
  std::vector<TokenSeq> all_sentences;
  for (const TokenizedParagraph& p : paragraphs) {
    double len = 0.0;
    for (const auto& s : p.sentences) {
      st.sentences += 1;
      sentence_tokens += static_cast<double>(s.size());
      len += static_cast<double>(s.size());
      for (const auto& tok : s) vocab.insert(tok);
      all_sentences.push_back(s);
    }
    lengths.push_back(len);
  }
  st.vocab_size = vocab.size();
  double mean = 0.0;
  for (double v : lengths) mean += v;
  mean /= static_cast<double>(lengths.size());
  st.avg_tokens_per_paragraph = mean;
  double var = 0.0;
  for (double v : lengths) var += (v - mean) * (v - mean);
  st.std_tokens_per_paragraph = std::sqrt(var / static_cast<double>(lengths.size()));
  st.avg_tokens_per_sentence =
      st.sentences == 0 ? 0.0 : sentence_tokens / static_cast<double>(st.sentences);

  const IdfTable idf = IdfTable::build(all_sentences);
  double div_sum = 0.0;
  std::size_t div_count = 0;
  for (const TokenizedParagraph& p : paragraphs) {
    const auto d = diversity(p.sentences, idf);
    if (d) {
      div_sum += *d;
      ++div_count;
    } else {
      ++st.diversity_skipped;
    }
  }
  if (div_count > 0) st.mean_diversity = div_sum / static_cast<double>(div_count);
  return st;
}

ScoreReport score_predictions(const std::vector<TokenizedParagraph>& predictions,
                              const std::vector<TokenizedParagraph>& references) {
  if (predictions.size() != references.size())
    throw Error("score_predictions: " + std::to_string(predictions.size()) +
                " predictions vs " + std::to_string(references.size()) + " references");
  if (predictions.empty()) throw Error("score_predictions: nothing to score");

  std::vector<TokenSeq> ref_docs;
  ref_docs.reserve(references.size());
  for (const auto& r : references) ref_docs.push_back(flatten_tokens(r));
  const IdfTable idf = IdfTable::build(ref_docs);

  ScoreReport report;
  BleuAccumulator acc;
  double cider_sum = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const TokenSeq cand = flatten_tokens(predictions[i]);
    const std::vector<TokenSeq> refs = {ref_docs[i]};
    acc.add(cand, refs);
    cider_sum += cider(cand, refs, idf);
    ++report.scored;
  }
  report.bleu = acc.scores();
  report.mean_cider = cider_sum / static_cast<double>(predictions.size());
  report.prediction_stats = corpus_stats(predictions);
  return report;
}

std::string ScoreReport::table() const {
  char buf[256];
  std::string out;
  out += "metric              value\n";
  out += "------------------  -------\n";
  const char* names[4] = {"BLEU-1", "BLEU-2", "BLEU-3", "BLEU-4"};
  for (int n = 0; n < 4; ++n) {
    std::snprintf(buf, sizeof(buf), "%-18s  %7.2f\n", names[n],
                  100.0 * bleu[static_cast<std::size_t>(n)]);
    out += buf;
  }
  std::snprintf(buf, sizeof(buf), "%-18s  %7.2f\n", "CIDEr", mean_cider);
  out += buf;
  if (prediction_stats.mean_diversity) {
    std::snprintf(buf, sizeof(buf), "%-18s  %7.2f\n", "diversity",
                  *prediction_stats.mean_diversity);
    out += buf;
  }
  std::snprintf(buf, sizeof(buf), "%-18s  %7.2f\n", "avg tokens",
                prediction_stats.avg_tokens_per_paragraph);
  out += buf;
  std::snprintf(buf, sizeof(buf), "%-18s  %7zu\n", "paragraphs", scored);
  out += buf;
  return out;
}

}  // namespace paragen
