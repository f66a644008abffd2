#include "seqnlg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <stdexcept>

namespace seqnlg::eval {

namespace {

using NgramCounts = std::map<TokenSequence, std::size_t>;

NgramCounts count_ngrams(const TokenSequence& tokens, std::size_t n) {
  NgramCounts out;
  if (tokens.size() < n) return out;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    ++out[TokenSequence(tokens.begin() + i, tokens.begin() + i + n)];
  }
  return out;
}

NgramCounts max_reference_counts(const ReferenceSet& refs, std::size_t n) {
  NgramCounts out;
  for (const TokenSequence& r : refs) {
    for (const auto& [g, c] : count_ngrams(r, n)) {
      std::size_t& m = out[g];
      m = std::max(m, c);
    }
  }
  return out;
}

void check_aligned(std::size_t hyps, std::size_t refs) {
  if (hyps == 0) throw std::invalid_argument("metric over an empty hypothesis list");
  if (hyps != refs) {
    throw std::invalid_argument("metric: " + std::to_string(hyps) + " hypotheses for " +
                                std::to_string(refs) + " reference sets");
  }
}

void check_refs(const ReferenceSet& refs) {
  if (refs.empty()) throw std::invalid_argument("metric: empty reference set");
}

}  // namespace

BleuStats& BleuStats::operator+=(const BleuStats& o) {
  for (std::size_t n = 0; n < kBleuOrder; ++n) {
    matches[n] += o.matches[n];
    totals[n] += o.totals[n];
  }
  hyp_length += o.hyp_length;
  ref_length += o.ref_length;
  return *this;
}

BleuStats bleu_stats(const TokenSequence& hyp, const ReferenceSet& refs) {
  check_refs(refs);
  BleuStats s;
  s.hyp_length = hyp.size();
  std::size_t best = refs.front().size();
  for (const TokenSequence& r : refs) {
    const auto d = [&](std::size_t len) {
      return std::llabs(static_cast<long long>(len) - static_cast<long long>(hyp.size()));
    };
    if (d(r.size()) < d(best) || (d(r.size()) == d(best) && r.size() < best)) best = r.size();
  }
  s.ref_length = best;
  for (std::size_t n = 1; n <= kBleuOrder; ++n) {
    const NgramCounts ref_max = max_reference_counts(refs, n);
    for (const auto& [g, c] : count_ngrams(hyp, n)) {
      auto it = ref_max.find(g);
      if (it != ref_max.end()) s.matches[n - 1] += std::min(c, it->second);
    }
    s.totals[n - 1] = hyp.size() >= n ? hyp.size() - n + 1 : 0;
  }
  return s;
}

double bleu_score(const BleuStats& s) {
  if (s.hyp_length == 0) return 0.0;
  double log_precision = 0.0;
  for (std::size_t n = 0; n < kBleuOrder; ++n) {
    // An order with no hypothesis n-grams at all is vacuously precise.
    if (s.totals[n] == 0) continue;
    if (s.matches[n] == 0) return 0.0;
    log_precision += std::log(static_cast<double>(s.matches[n]) / static_cast<double>(s.totals[n]));
  }
  log_precision /= static_cast<double>(kBleuOrder);
  const double c = static_cast<double>(s.hyp_length);
  const double r = static_cast<double>(s.ref_length);
  const double log_bp = c < r ? 1.0 - r / c : 0.0;
  return 100.0 * std::exp(log_bp + log_precision);
}

double bleu(std::span<const TokenSequence> hyps, std::span<const ReferenceSet> refs) {
  check_aligned(hyps.size(), refs.size());
  BleuStats total;
  for (std::size_t i = 0; i < hyps.size(); ++i) total += bleu_stats(hyps[i], refs[i]);
  return bleu_score(total);
}

NistScorer::Stats& NistScorer::Stats::operator+=(const Stats& o) {
  for (std::size_t n = 0; n < kNistOrder; ++n) {
    info[n] += o.info[n];
    totals[n] += o.totals[n];
  }
  hyp_length += o.hyp_length;
  ref_length += o.ref_length;
  return *this;
}

NistScorer::NistScorer(std::span<const ReferenceSet> refs) {
  for (const ReferenceSet& set : refs) {
    for (const TokenSequence& r : set) {
      total_words_ += r.size();
      for (std::size_t n = 1; n <= kNistOrder; ++n) {
        for (const auto& [g, c] : count_ngrams(r, n)) counts_[g] += c;
      }
    }
  }
}

double NistScorer::info(const TokenSequence& ngram) const {
  auto it = counts_.find(ngram);
  if (ngram.empty() || it == counts_.end()) return 0.0;
  double context = static_cast<double>(total_words_);
  if (ngram.size() > 1) {
    auto ctx = counts_.find(TokenSequence(ngram.begin(), ngram.end() - 1));
    context = static_cast<double>(ctx->second);
  }
  return std::log2(context / static_cast<double>(it->second));
}

NistScorer::Stats NistScorer::stats(const TokenSequence& hyp, const ReferenceSet& refs) const {
  check_refs(refs);
  Stats s;
  s.hyp_length = hyp.size();
  double ref_total = 0.0;
  for (const TokenSequence& r : refs) ref_total += static_cast<double>(r.size());
  s.ref_length = ref_total / static_cast<double>(refs.size());
  for (std::size_t n = 1; n <= kNistOrder; ++n) {
    const NgramCounts ref_max = max_reference_counts(refs, n);
    for (const auto& [g, c] : count_ngrams(hyp, n)) {
      auto it = ref_max.find(g);
      if (it != ref_max.end()) s.info[n - 1] += info(g) * static_cast<double>(std::min(c, it->second));
    }
    s.totals[n - 1] = hyp.size() >= n ? hyp.size() - n + 1 : 0;
  }
  return s;
}

double NistScorer::score(const Stats& s) const {
  double total = 0.0;
  for (std::size_t n = 0; n < kNistOrder; ++n) {
    total += s.info[n] / static_cast<double>(std::max<std::size_t>(s.totals[n], 1));
  }
  // Brevity factor: 1 at or above reference length, 0.5 at two thirds of it.
  const double beta = -std::log(0.5) / std::pow(std::log(1.5), 2);
  double ratio = s.ref_length > 0 ? static_cast<double>(s.hyp_length) / s.ref_length : 1.0;
  ratio = std::min(ratio, 1.0);
  const double penalty = ratio > 0 ? std::exp(-beta * std::pow(std::log(ratio), 2)) : 0.0;
  return total * penalty;
}

double nist(std::span<const TokenSequence> hyps, std::span<const ReferenceSet> refs) {
  check_aligned(hyps.size(), refs.size());
  NistScorer scorer(refs);
  NistScorer::Stats total;
  for (std::size_t i = 0; i < hyps.size(); ++i) total += scorer.stats(hyps[i], refs[i]);
  return scorer.score(total);
}

}  // namespace seqnlg::eval
