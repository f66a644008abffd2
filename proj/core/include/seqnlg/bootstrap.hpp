#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "seqnlg/metrics.hpp"

namespace seqnlg::eval {

/// Corpus score of one system on a resampled list of instance indices.
using SampleMetric = std::function<double(std::span<const std::size_t> sample)>;

struct BootstrapResult {
  /// Fraction of resamples where B does not beat A; ties count one half.
  double p_value = 0.0;
  std::size_t b_better = 0;
  std::size_t a_better = 0;
  std::size_t ties = 0;
  std::size_t iterations = 0;
};

inline constexpr std::size_t kMinBootstrapIterations = 1000;

/// Paired bootstrap resampling. Iteration i draws its sample from an RNG
/// seeded with mix_seed(seed, i), so results depend only on the seed.
BootstrapResult paired_bootstrap(const SampleMetric& metric_a, const SampleMetric& metric_b,
                                 std::size_t instances, std::size_t iterations,
                                 std::uint64_t seed);

enum class CorpusMetric { bleu, nist };

/// Paired bootstrap on corpus BLEU or NIST (NIST information weights are
/// estimated once from the full reference corpus).
BootstrapResult paired_bootstrap(std::span<const TokenSequence> outputs_a,
                                 std::span<const TokenSequence> outputs_b,
                                 std::span<const ReferenceSet> references, CorpusMetric metric,
                                 std::size_t iterations, std::uint64_t seed);

}  // namespace seqnlg::eval
