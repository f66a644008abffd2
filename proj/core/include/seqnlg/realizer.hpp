#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "seqnlg/syntax_tree.hpp"
#include "seqnlg/text.hpp"

namespace seqnlg {

enum class Placement { before, after };
enum class Article { none, indefinite, definite };
enum class VerbForm { none, finite, gerund, participle };

/// How a node with a given formeme is placed and inflected.
struct FormemeRule {
  Placement placement = Placement::after;
  std::vector<std::string> prefix;  // "*" is replaced by the formeme's wildcard match
  Article article = Article::none;
  VerbForm verb_form = VerbForm::none;
  /// Adjacent siblings sharing this formeme are joined with the conjunction.
  bool conjoin = false;
  /// Suppresses plural morphology (noun modifiers stay singular).
  bool singular = false;
};

/// Rule table loaded from a versioned JSON file.
struct RealizationRules {
  static constexpr int kVersion = 1;

  /// Keys are formemes; one "*" may stand for a non-empty middle part.
  std::map<std::string, FormemeRule> formemes;
  std::map<std::string, std::string> finite_forms;
  std::map<std::string, std::string> gerund_forms;
  std::map<std::string, std::string> participle_forms;
  std::map<std::string, std::string> pronouns;
  std::set<std::string> always_plural;
  std::set<std::string> mass_nouns;
  /// Nouns whose plural "-s" is split during tokenization.
  PluralLexicon plural_lexicon;
  std::string conjunction = "and";
  std::string terminal = ".";

  static RealizationRules load(const std::filesystem::path& path);
  /// Throws DataError on schema violations or a version other than kVersion.
  static RealizationRules from_json_text(const std::string& text);

  /// Rule for `formeme` and the wildcard match, or nullptr.
  const FormemeRule* find(const std::string& formeme, std::string* wildcard = nullptr) const;
};

struct Realization {
  std::string text;
  TokenSequence tokens;
  /// Nodes whose formeme had no rule and were emitted as bare lemmas.
  std::size_t fallbacks = 0;
  /// One line per node: "lemma formeme -> rule".
  std::vector<std::string> trace;
};

/// Linearizes each child of the technical root as one sentence.
Realization realize(const DeepSyntaxTree& tree, const RealizationRules& rules);

}  // namespace seqnlg
