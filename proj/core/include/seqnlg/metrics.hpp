#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include "seqnlg/dialogue_act.hpp"

namespace seqnlg::eval {

/// All references for one instance.
using ReferenceSet = std::vector<TokenSequence>;

inline constexpr std::size_t kBleuOrder = 4;
inline constexpr std::size_t kNistOrder = 5;

/// Sufficient statistics of corpus BLEU for one or more instances.
struct BleuStats {
  std::array<std::size_t, kBleuOrder> matches{};
  std::array<std::size_t, kBleuOrder> totals{};
  std::size_t hyp_length = 0;
  std::size_t ref_length = 0;  // closest reference length, shorter on ties

  BleuStats& operator+=(const BleuStats& o);
};

BleuStats bleu_stats(const TokenSequence& hyp, const ReferenceSet& refs);
/// BLEU in [0, 100]; zero when any n-gram order has no match. Orders the
/// hypotheses are too short to contain count as precision 1.
double bleu_score(const BleuStats& stats);
/// Corpus BLEU; throws std::invalid_argument on empty or misaligned input.
double bleu(std::span<const TokenSequence> hyps, std::span<const ReferenceSet> refs);

/// NIST with information weights estimated from a fixed reference corpus.
class NistScorer {
 public:
  struct Stats {
    std::array<double, kNistOrder> info{};
    std::array<std::size_t, kNistOrder> totals{};
    std::size_t hyp_length = 0;
    double ref_length = 0.0;  // mean reference length

    Stats& operator+=(const Stats& o);
  };

  explicit NistScorer(std::span<const ReferenceSet> refs);

  /// Information weight of an n-gram; zero for n-grams never seen in references.
  double info(const TokenSequence& ngram) const;
  Stats stats(const TokenSequence& hyp, const ReferenceSet& refs) const;
  double score(const Stats& stats) const;

 private:
  std::map<TokenSequence, std::size_t> counts_;
  std::size_t total_words_ = 0;
};

double nist(std::span<const TokenSequence> hyps, std::span<const ReferenceSet> refs);

}  // namespace seqnlg::eval
