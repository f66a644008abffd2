#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "seqnlg/dialogue_act.hpp"
#include "seqnlg/syntax_tree.hpp"
#include "seqnlg/text.hpp"

namespace seqnlg::eval {

/// Surface patterns realizing each "slot=value" class.
///
/// File form (JSON):
///   {"version": 1,
///    "patterns": {"food=French": ["french"], ...},
///    "tree_patterns": {"area=citycentre": ["centre city"]},
///    "unrealized": ["type=placetoeat"]}
/// Pattern strings are tokenized with the sentence tokenizer. Tree patterns
/// are lemma sequences in tree pre-order; classes without one fall back to
/// the surface patterns. "unrealized" classes are never counted.
class SlotPatternLexicon {
 public:
  static SlotPatternLexicon load(const std::filesystem::path& path, const PluralLexicon& plurals);
  static SlotPatternLexicon from_json_text(const std::string& text, const PluralLexicon& plurals);

  void add_pattern(const std::string& cls, TokenSequence pattern);
  void add_tree_pattern(const std::string& cls, TokenSequence pattern);
  void mark_unrealized(const std::string& cls);

  bool knows(const std::string& cls) const;
  bool is_unrealized(const std::string& cls) const { return unrealized_.contains(cls); }
  const std::map<std::string, std::vector<TokenSequence>>& patterns() const { return patterns_; }

  /// Throws DataError if a class has neither a pattern nor an unrealized mark.
  void check_covers(std::span<const std::string> classes) const;

  /// Non-overlapping longest-first matches: class -> occurrence count.
  std::map<std::string, std::size_t> match(const TokenSequence& tokens, bool tree) const;

 private:
  std::map<std::string, std::vector<TokenSequence>> patterns_;
  std::map<std::string, std::vector<TokenSequence>> tree_patterns_;
  std::set<std::string> unrealized_;
};

struct SlotErrors {
  std::size_t missing = 0;
  std::size_t superfluous = 0;
  std::size_t repeated = 0;
  std::vector<std::string> missing_classes;
  std::vector<std::string> superfluous_classes;
  std::vector<std::string> repeated_classes;

  std::size_t total() const noexcept { return missing + superfluous + repeated; }
  SlotErrors& operator+=(const SlotErrors& o);
};

/// Compares pattern matches in a tokenized output string with the DA.
/// Throws DataError if the DA contains a class the lexicon does not know.
SlotErrors slot_errors(const TokenSequence& output, const DialogueAct& da,
                       const SlotPatternLexicon& lex);
/// Same on a tree, matching against its pre-order lemma sequence.
SlotErrors slot_errors(const DeepSyntaxTree& output, const DialogueAct& da,
                       const SlotPatternLexicon& lex);

}  // namespace seqnlg::eval
