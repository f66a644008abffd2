#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "seqnlg/corpus.hpp"
#include "seqnlg/model.hpp"
#include "seqnlg/realizer.hpp"
#include "seqnlg/reranker.hpp"
#include "seqnlg/slot_errors.hpp"

namespace seqnlg {

struct ExperimentPaths {
  /// Empty: synthesize `synthetic_das` DAs from the grammar.
  std::filesystem::path corpus;
  std::filesystem::path grammar;
  std::filesystem::path realizer_rules;
  std::filesystem::path slot_lexicon;
  std::filesystem::path runs = "runs";
};

struct ExperimentConfig {
  OutputMode mode = OutputMode::string;
  TrainConfig train;
  RerankerTrainConfig reranker;
  RerankConfig rerank;
  std::vector<std::size_t> beam_sizes{1, 5, 10, 100};
  std::size_t folds = 10;
  std::size_t validation_das_per_fold = 10;
  std::uint64_t seed = 1;
  std::size_t synthetic_das = 202;
  std::size_t bootstrap_iterations = 1000;
  ExperimentPaths paths;

  /// Relative paths resolve against `base_dir`; unset data files default to
  /// the files shipped in `data_dir`. Throws DataError on invalid fields.
  static ExperimentConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir,
                                    const std::filesystem::path& data_dir);
  static ExperimentConfig load(const std::filesystem::path& path, const std::filesystem::path& data_dir);
  nlohmann::json to_json() const;
  /// Sorts and deduplicates beam sizes; throws DataError on invalid values.
  void normalize();
  /// FNV-1a of the canonical JSON without the runs root, as 16 hex digits.
  std::string hash() const;
  std::filesystem::path run_dir() const { return paths.runs / ("run-" + hash()); }

  std::vector<std::string> setups() const;
  std::size_t largest_beam() const { return beam_sizes.back(); }
};

struct Fold {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
};

struct FoldPlan {
  std::vector<Fold> folds;
};

/// Seeded shuffle of DA ids, round-robin test assignment, and validation DAs
/// drawn from each fold's remaining training portion (train and validation
/// lists are disjoint). Throws DataError when there are fewer DAs than folds.
FoldPlan make_folds(std::size_t n_das, std::size_t folds, std::size_t validation_per_fold, std::uint64_t seed);

nlohmann::json to_json(const FoldPlan& plan);
FoldPlan fold_plan_from_json(const nlohmann::json& j);

/// Target tokens of reference `r` of `e` in the given mode.
TokenSequence target_tokens(const CorpusEntry& e, std::size_t r, OutputMode mode, const PluralLexicon& plurals);

struct InstanceResult {
  std::size_t id = 0;
  std::size_t fold = 0;
  std::string setup;
  TokenSequence output;  // decoder tokens
  TokenSequence tokens;  // evaluated (delexicalized) tokens
  std::string text;      // relexicalized surface form
  double log_prob = 0.0;
  std::optional<double> penalty;
  bool truncated = false;
  std::size_t recoveries = 0;
  eval::SlotErrors errors;
};

nlohmann::json to_json(const InstanceResult& r);
InstanceResult instance_from_json(const nlohmann::json& j);

struct SetupScore {
  std::string setup;
  bool failed = false;
  std::string error;
  std::size_t instances = 0;
  double bleu = 0.0;
  double nist = 0.0;
  eval::SlotErrors errors;
};

struct SignificanceRow {
  std::string system_a;
  std::string system_b;
  std::string metric;
  double p_value = 0.0;
  std::size_t iterations = 0;
};

struct CvReport {
  std::vector<SetupScore> pooled;
  std::vector<std::pair<std::size_t, SetupScore>> per_fold;
  std::vector<SignificanceRow> significance;
  std::vector<InstanceResult> instances;

  const SetupScore* find(const std::string& setup) const;
};

/// Table-shaped TSV: Setup, BLEU, NIST, Missing, Superfluous, Repeated.
std::string format_report_tsv(std::span<const SetupScore> rows);

/// Cross-validation experiment rooted at the config's run directory.
class Experiment {
 public:
  explicit Experiment(ExperimentConfig config);

  const ExperimentConfig& config() const noexcept { return config_; }
  const std::filesystem::path& run_dir() const noexcept { return run_dir_; }

  /// Loads or synthesizes the corpus, checks resources, writes the corpus
  /// copy, the fold plan and the config echo. Idempotent.
  void prepare();

  const std::vector<CorpusEntry>& corpus();
  const FoldPlan& plan();
  const RealizationRules& rules();
  const eval::SlotPatternLexicon& slot_lexicon();

  std::filesystem::path generator_path(std::size_t fold) const;
  std::filesystem::path reranker_path(std::size_t fold) const;
  std::filesystem::path outputs_path(std::size_t fold) const;

  GeneratorModel train_generator(std::size_t fold);
  RerankerModel train_reranker(std::size_t fold);
  /// Throws DataError naming the training command if the file is missing.
  GeneratorModel load_generator(std::size_t fold) const;
  RerankerModel load_reranker(std::size_t fold) const;

  /// Decodes the fold's test DAs under every setup and writes the outputs.
  std::vector<InstanceResult> generate(std::size_t fold);
  /// One DA under one setup, with the fold's models.
  InstanceResult generate_one(const GeneratorModel& gen, const RerankerModel* rr, const CorpusEntry& entry,
                              const std::string& setup);

  /// Pools all fold outputs and writes the report files.
  CvReport evaluate();
  /// prepare, then per fold: train what is missing and generate; then evaluate.
  CvReport run();

 private:
  void ensure_prepared();
  void check_fold(std::size_t fold);

  ExperimentConfig config_;
  std::filesystem::path run_dir_;
  bool prepared_ = false;
  std::vector<CorpusEntry> corpus_;
  FoldPlan plan_;
  RealizationRules rules_;
  eval::SlotPatternLexicon lexicon_;
};

}  // namespace seqnlg
