#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "seqnlg/adam.hpp"
#include "seqnlg/generator.hpp"
#include "seqnlg/metrics.hpp"
#include "seqnlg/vocabulary.hpp"

namespace seqnlg {

struct TrainConfig {
  double learning_rate = 0.001;
  std::size_t embedding_size = 50;
  std::size_t cell_size = 128;
  std::size_t batch_size = 20;
  std::size_t max_passes = 1000;
  std::size_t patience_passes = 100;
  std::size_t top_k_tracked = 10;
  std::size_t restarts = 10;
  /// 0 selects the mode default (60 tokens for strings, 120 for trees).
  std::size_t max_decode_length = 0;
  std::uint64_t seed = 1;
  double init_scale = 0.1;
  bool zero_init_cell = false;
  /// A restart ends as soon as validation BLEU reaches this value.
  double target_bleu = 100.0;

  /// Throws std::invalid_argument naming the first offending field.
  void validate() const;
  std::size_t decode_length(OutputMode mode) const {
    return max_decode_length ? max_decode_length : default_max_length(mode);
  }
};

struct TrainingPair {
  IdSequence input;
  IdSequence target;  // without GO/STOP
};

struct ValidationItem {
  IdSequence input;
  eval::ReferenceSet refs;  // output-side tokens
};

struct PassRecord {
  std::size_t pass = 0;  // 1-based
  double loss = 0.0;     // mean per-instance loss over the pass
  double bleu = 0.0;     // greedy validation BLEU after the pass
};

struct RestartReport {
  std::size_t restart = 0;
  std::uint64_t seed = 0;
  bool diverged = false;
  bool early_stopped = false;
  std::size_t best_pass = 0;
  double best_bleu = -1.0;
  std::vector<PassRecord> history;
};

struct TrainReport {
  std::vector<RestartReport> restarts;
  std::size_t best_restart = 0;
  double best_bleu = -1.0;
};

struct TrainResult {
  GeneratorParams params;
  TrainReport report;
};

/// Tracks the multiset of the k best values seen so far.
class TopKTracker {
 public:
  explicit TopKTracker(std::size_t k) : k_(k) {}
  /// Returns true if the tracked multiset changed.
  bool offer(double value);
  const std::vector<double>& values() const noexcept { return values_; }

 private:
  std::size_t k_;
  std::vector<double> values_;  // descending
};

using PassCallback = std::function<void(const RestartReport&, const PassRecord&)>;

/// Mean teacher-forced loss of `pairs` under `params` (no gradients).
double mean_loss(const GeneratorParams& params, std::span<const TrainingPair> pairs, bool zero_cell);

/// Greedy-decoding BLEU over a validation set.
double validation_bleu(const GeneratorParams& params, std::span<const ValidationItem> items,
                       const Vocabulary& output_vocab, std::size_t max_length, bool zero_cell);

/// One Adam step over `batch`; returns the summed loss, or NaN when the loss or
/// a gradient is not finite (parameters are then left untouched).
double train_batch(GeneratorParams& params, nn::AdamState& adam, GeneratorParams& grads,
                   std::span<const TrainingPair* const> batch, bool zero_cell);

/// Full training protocol: seeded restarts, shuffled mini-batches, per-pass
/// greedy validation, best-snapshot keeping and top-k patience stopping.
/// Throws TrainingError when the corpus is empty or every restart diverges.
TrainResult train_generator(std::span<const TrainingPair> train, std::span<const ValidationItem> validation,
                            const Vocabulary& input_vocab, const Vocabulary& output_vocab,
                            OutputMode mode, const TrainConfig& config,
                            const PassCallback& on_pass = {});

}  // namespace seqnlg
