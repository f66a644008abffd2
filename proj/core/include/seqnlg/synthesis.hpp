#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "seqnlg/corpus.hpp"

namespace seqnlg {

/// Paired surface and tree-fragment text for one slot variant.
struct FragmentText {
  std::string string;
  std::string tree;
};

struct Fragment {
  FragmentText base;  // "{v}" stands for the lowercased value
  std::map<std::string, FragmentText> overrides;
  std::optional<FragmentText> fallback;  // used when the slot is absent
  std::string join;  // joins multiple values in the string form
};

struct SlotSpec {
  std::vector<std::string> values;
  double probability = 1.0;
  std::size_t max_values = 1;
  double extra_probability = 0.0;
};

struct SentenceTemplate {
  std::vector<std::string> string_tokens;
  std::vector<std::string> tree_tokens;
  std::set<std::string> referenced;  // slots a template can express
  std::set<std::string> required;    // slots it cannot do without
};

/// Template grammar for a synthetic restaurant-domain corpus.
struct Grammar {
  static constexpr int kVersion = 1;

  std::string act = "inform";
  std::vector<std::string> slot_order;
  std::map<std::string, SlotSpec> slots;
  std::map<std::string, std::map<std::string, Fragment>> fragments;
  std::set<std::string> unrealized;
  std::vector<SentenceTemplate> templates;
  std::map<std::string, std::vector<std::string>> lexicon;

  static Grammar load(const std::filesystem::path& path);
  /// Throws DataError on schema errors or templates whose two forms disagree.
  static Grammar from_json_text(const std::string& text);

  /// Number of distinct DAs the slot inventory can produce.
  double da_space_size() const;
};

struct Paraphrase {
  std::string text;
  std::string tree;  // bracketed
};

/// Realizes `da` with template `t`; nullopt when the template does not fit.
std::optional<Paraphrase> apply_template(const Grammar& g, const SentenceTemplate& t, const DialogueAct& da);

/// `n_das` distinct DAs with two distinct paraphrases each, gold trees and
/// lexical maps. Throws DataError when the inventory is too small.
std::vector<CorpusEntry> synthesize_corpus(const Grammar& g, std::size_t n_das, std::uint64_t seed);

}  // namespace seqnlg
