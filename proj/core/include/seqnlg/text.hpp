#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <string_view>

#include "seqnlg/dialogue_act.hpp"

namespace seqnlg {

/// Token emitted for a split-off plural morpheme.
inline constexpr std::string_view kPluralToken = "-s";

/// Singular nouns whose regular "-s" plural is split into its own token.
using PluralLexicon = std::set<std::string, std::less<>>;

/// Lowercases, splits on whitespace, peels leading/trailing punctuation into
/// separate tokens, and splits "<noun>s" into "<noun>", "-s" for lexicon nouns.
TokenSequence tokenize_sentence(std::string_view text, const PluralLexicon& plurals);

/// Inverse presentation form: rejoins "-s", attaches punctuation, restores
/// "x" placeholders to "X" and capitalizes each sentence start.
std::string detokenize(const TokenSequence& tokens);

/// Placeholder surface forms keyed by placeholder (e.g. "X-name" -> "Golden Wok").
using LexicalMap = std::map<std::string, std::string>;

struct Relexicalized {
  std::string text;
  std::size_t unresolved = 0;
};

/// Replaces explicit placeholders (X-name) from the map and bare "X" tokens
/// with the DA's placeholder values taken in triple order.
Relexicalized relexicalize(std::string_view text, const DialogueAct& da, const LexicalMap& lex);

/// True for delexicalized placeholders such as "X", "X-name" (any case).
bool is_placeholder(std::string_view token);

}  // namespace seqnlg
