#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

#include <nlohmann/json.hpp>

#include "seqnlg/dialogue_act.hpp"
#include "seqnlg/generator.hpp"
#include "seqnlg/training.hpp"
#include "seqnlg/vocabulary.hpp"

namespace seqnlg {

/// A trained generator together with everything needed to run it again.
struct GeneratorModel {
  GeneratorParams params;
  Vocabulary input_vocab;
  Vocabulary output_vocab;
  TrainConfig config;
  /// Corpus ids of every DA seen in training or validation.
  std::vector<std::size_t> training_ids;
  TrainReport report;

  OutputMode mode() const noexcept { return params.mode; }
  std::size_t max_length() const { return config.decode_length(params.mode); }

  /// DA triples mapped through the input vocabulary.
  IdSequence encode_input(const DialogueAct& da) const;
  GreedyResult greedy(const DialogueAct& da) const;
  std::vector<Hypothesis> beam(const DialogueAct& da, std::size_t beam_size) const;
};

nlohmann::json to_json(const TrainConfig& c);
/// Missing fields keep their defaults; unknown fields are rejected.
TrainConfig train_config_from_json(const nlohmann::json& j);

nlohmann::json report_to_json(const TrainReport& r);

nlohmann::json params_to_json(const GeneratorParams& p);
GeneratorParams params_from_json(const nlohmann::json& j);

void save_model(const std::filesystem::path& path, const GeneratorModel& model);
/// Throws DataError on a malformed file or a format-version mismatch.
GeneratorModel load_model(const std::filesystem::path& path);

}  // namespace seqnlg
