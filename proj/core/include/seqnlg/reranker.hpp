#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "seqnlg/dialogue_act.hpp"
#include "seqnlg/generator.hpp"
#include "seqnlg/kernels.hpp"
#include "seqnlg/random.hpp"
#include "seqnlg/vocabulary.hpp"

namespace seqnlg {

/// Ordered set of content classes: act types followed by "slot=value" classes.
class ClassInventory {
 public:
  ClassInventory() = default;
  /// Throws std::invalid_argument on duplicate or empty class names.
  explicit ClassInventory(std::vector<std::string> classes);

  /// Act types (sorted) then slot-value classes (sorted) seen in `das`.
  static ClassInventory build(std::span<const DialogueAct> das);

  std::size_t size() const noexcept { return classes_.size(); }
  const std::vector<std::string>& classes() const noexcept { return classes_; }
  const std::string& at(std::size_t i) const { return classes_.at(i); }
  std::optional<std::size_t> find(const std::string& cls) const;

  friend bool operator==(const ClassInventory& a, const ClassInventory& b) {
    return a.classes_ == b.classes_;
  }

 private:
  std::vector<std::string> classes_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Multi-hot presence vector over an inventory; entries are 0 or 1.
using ContentVector = std::vector<std::uint8_t>;

struct ContentEncoding {
  ContentVector bits;
  std::size_t out_of_inventory = 0;
};

ContentEncoding da_to_content_vector(const DialogueAct& da, const ClassInventory& inv);

/// Number of differing positions; throws std::invalid_argument on length mismatch.
std::size_t hamming_penalty(const ContentVector& a, const ContentVector& b);

struct RerankerDims {
  std::size_t vocab = 0;
  std::size_t classes = 0;
  std::size_t embedding = 50;
  std::size_t cell = 128;
};

struct RerankerParams {
  RerankerDims dims;
  Tensor embeddings;   // [vocab x embedding]
  nn::LstmCellParams encoder;
  Tensor projection;   // W_R [cell x classes]
  Tensor bias;         // [classes]

  static RerankerParams zeros(const RerankerDims& dims);
  static RerankerParams random(const RerankerDims& dims, Rng& rng, double scale = 0.1);
  void validate() const;

  template <class F>
  void visit(F&& f) {
    visit_impl(*this, f);
  }
  template <class F>
  void visit(F&& f) const {
    visit_impl(*this, f);
  }
  std::vector<Tensor*> tensors();

  friend bool operator==(const RerankerParams& a, const RerankerParams& b);

 private:
  template <class Self, class F>
  static void visit_impl(Self& self, F& f) {
    f("embeddings", self.embeddings);
    f("encoder.input_weights", self.encoder.input_weights);
    f("encoder.hidden_weights", self.encoder.hidden_weights);
    f("encoder.bias", self.encoder.bias);
    f("projection", self.projection);
    f("bias", self.bias);
  }
};

struct RerankConfig {
  double penalty_weight = 100.0;
  double threshold = 0.5;
  /// Use the expected distance sum_i |o_i - d_i| instead of binarized Hamming.
  bool expected_distance = false;

  void validate() const;
};

struct Classification {
  Tensor probabilities;
  ContentVector bits;
  /// Set when the candidate was empty and only the bias decided.
  bool empty_input = false;
};

/// o = sigmoid(h_n W_R + b), bit i set when o_i >= threshold.
Classification classify(const RerankerParams& params, const IdSequence& candidate, double threshold);

struct RerankEntry {
  std::size_t original_rank = 0;
  double log_prob = 0.0;
  double penalty = 0.0;
  double score = 0.0;
};

/// Sorts by score = log_prob - weight * penalty, descending, keeping the
/// original order among equal scores. Returns the entries in the new order.
std::vector<RerankEntry> rerank_scores(std::span<const double> log_probs, std::span<const double> penalties,
                                       double weight);

struct RerankerExample {
  IdSequence input;
  ContentVector target;
};

struct RerankerTrainConfig {
  double learning_rate = 0.001;
  std::size_t embedding_size = 50;
  std::size_t cell_size = 128;
  std::size_t batch_size = 20;
  std::size_t max_passes = 100;
  std::uint64_t seed = 1;
  double init_scale = 0.1;
  double threshold = 0.5;
  /// Weight of the validation distance in the selection score.
  double validation_weight = 10.0;

  void validate() const;
};

struct RerankerPass {
  std::size_t pass = 0;
  double loss = 0.0;
  std::size_t train_distance = 0;
  std::size_t validation_distance = 0;
  double selection_score = 0.0;
};

struct RerankerTrainReport {
  std::vector<RerankerPass> history;
  std::size_t best_pass = 0;
  double best_score = 0.0;
  bool diverged = false;
};

/// Total Hamming distance of binarized predictions over a set of examples.
std::size_t total_distance(const RerankerParams& params, std::span<const RerankerExample> examples,
                           double threshold);

struct RerankerTrainResult {
  RerankerParams params;
  RerankerTrainReport report;
};

using RerankerPassCallback = std::function<void(const RerankerPass&)>;

/// Adam on per-class binary cross-entropy; keeps the pass minimizing
/// validation_weight * validation distance + training distance.
/// Throws TrainingError on an empty corpus or divergence in the first pass.
RerankerTrainResult train_reranker(std::span<const RerankerExample> train,
                                   std::span<const RerankerExample> validation, const RerankerDims& dims,
                                   const RerankerTrainConfig& config,
                                   const RerankerPassCallback& on_pass = {});

/// Turns a decoder output into the reranker's token view: string tokens as
/// they are, trees parsed from brackets and flattened to lemma/formeme pairs.
TokenSequence reranker_view(const TokenSequence& decoder_output, OutputMode mode);

/// A trained reranker with its vocabulary and class inventory.
struct RerankerModel {
  OutputMode mode = OutputMode::string;
  Vocabulary vocab;
  ClassInventory inventory;
  RerankerParams params;
  RerankerTrainConfig config;
  RerankerTrainReport report;
  std::vector<std::size_t> training_ids;

  Classification classify(const TokenSequence& view_tokens, double threshold) const;
  /// Penalty of one candidate (decoder tokens) against a DA.
  double penalty(const TokenSequence& decoder_output, const DialogueAct& da, const RerankConfig& cfg) const;

  /// Reorders an n-best list; returns the diagnostics in the new order.
  std::vector<RerankEntry> rerank(std::span<const TokenSequence> decoder_outputs,
                                  std::span<const double> log_probs, const DialogueAct& da,
                                  const RerankConfig& cfg) const;
};

void save_reranker(const std::filesystem::path& path, const RerankerModel& model);
RerankerModel load_reranker(const std::filesystem::path& path);

}  // namespace seqnlg
