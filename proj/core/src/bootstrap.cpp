#include "seqnlg/bootstrap.hpp"

#include <stdexcept>

#include "seqnlg/random.hpp"

namespace seqnlg::eval {

BootstrapResult paired_bootstrap(const SampleMetric& metric_a, const SampleMetric& metric_b,
                                 std::size_t instances, std::size_t iterations,
                                 std::uint64_t seed) {
  if (instances == 0) throw std::invalid_argument("paired_bootstrap: no instances");
  if (iterations < kMinBootstrapIterations) {
    throw std::invalid_argument("paired_bootstrap: at least " +
                                std::to_string(kMinBootstrapIterations) + " iterations required");
  }
  BootstrapResult r;
  r.iterations = iterations;
  std::vector<std::size_t> sample(instances);
  for (std::size_t it = 0; it < iterations; ++it) {
    Rng rng(mix_seed(seed, it));
    for (std::size_t& s : sample) s = rng.index(instances);
    const double a = metric_a(sample);
    const double b = metric_b(sample);
    if (b > a) {
      ++r.b_better;
    } else if (a > b) {
      ++r.a_better;
    } else {
      ++r.ties;
    }
  }
  r.p_value = (static_cast<double>(r.a_better) + 0.5 * static_cast<double>(r.ties)) /
              static_cast<double>(iterations);
  return r;
}

BootstrapResult paired_bootstrap(std::span<const TokenSequence> outputs_a,
                                 std::span<const TokenSequence> outputs_b,
                                 std::span<const ReferenceSet> references, CorpusMetric metric,
                                 std::size_t iterations, std::uint64_t seed) {
  if (outputs_a.size() != outputs_b.size() || outputs_a.size() != references.size()) {
    throw std::invalid_argument("paired_bootstrap: output lists and references are misaligned");
  }
  const std::size_t n = outputs_a.size();
  if (metric == CorpusMetric::bleu) {
    std::vector<BleuStats> sa, sb;
    for (std::size_t i = 0; i < n; ++i) {
      sa.push_back(bleu_stats(outputs_a[i], references[i]));
      sb.push_back(bleu_stats(outputs_b[i], references[i]));
    }
    auto make = [](const std::vector<BleuStats>& stats) {
      return [&stats](std::span<const std::size_t> sample) {
        BleuStats total;
        for (std::size_t i : sample) total += stats[i];
        return bleu_score(total);
      };
    };
    return paired_bootstrap(make(sa), make(sb), n, iterations, seed);
  }
  const NistScorer scorer(references);
  std::vector<NistScorer::Stats> sa, sb;
  for (std::size_t i = 0; i < n; ++i) {
    sa.push_back(scorer.stats(outputs_a[i], references[i]));
    sb.push_back(scorer.stats(outputs_b[i], references[i]));
  }
  auto make = [&scorer](const std::vector<NistScorer::Stats>& stats) {
    return [&stats, &scorer](std::span<const std::size_t> sample) {
      NistScorer::Stats total;
      for (std::size_t i : sample) total += stats[i];
      return scorer.score(total);
    };
  };
  return paired_bootstrap(make(sa), make(sb), n, iterations, seed);
}

}  // namespace seqnlg::eval
