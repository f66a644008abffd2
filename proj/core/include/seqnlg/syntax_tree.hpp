#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "seqnlg/dialogue_act.hpp"

namespace seqnlg {

/// Content-word node of a deep syntax tree.
struct DeepSyntaxNode {
  std::string lemma;
  std::string formeme;
  std::vector<DeepSyntaxNode> children;

  std::size_t node_count() const;
  friend bool operator==(const DeepSyntaxNode&, const DeepSyntaxNode&) = default;
};

/// Tree under a technical root that has no lemma or formeme; the root's
/// children are stored directly.
struct DeepSyntaxTree {
  std::vector<DeepSyntaxNode> children;

  bool empty() const noexcept { return children.empty(); }
  std::size_t node_count() const;
  /// Throws DataError if any node has an empty or bracket-like label.
  void validate() const;
  /// Lowercases all lemmas and formemes in place.
  void lowercase();

  friend bool operator==(const DeepSyntaxTree&, const DeepSyntaxTree&) = default;
};

inline constexpr std::string_view kOpenBracket = "(";
inline constexpr std::string_view kCloseBracket = ")";
/// Formeme assigned to a recovered node that lacked one.
inline constexpr std::string_view kFallbackFormeme = "x";

/// Pre-order bracketed encoding: node := "(" lemma formeme node* ")".
/// The root's children are emitted one after another.
TokenSequence tree_to_bracketed(const DeepSyntaxTree& tree);

struct TreeParse {
  DeepSyntaxTree tree;
  /// Number of repairs applied (closed brackets, dropped tokens, default formemes).
  std::size_t recoveries = 0;
  std::vector<std::string> diagnostics;
};

/// Parses bracketed tokens, repairing decoder output where possible.
/// Throws ParseError on empty input or when nothing usable remains.
TreeParse bracketed_to_tree(const TokenSequence& tokens);

/// Convenience: whitespace-separated bracketed text.
TreeParse parse_bracketed(std::string_view text);
std::string format_bracketed(const DeepSyntaxTree& tree);

/// Pre-order [lemma, formeme, lemma, formeme, ...] with no structure.
TokenSequence tree_to_flat(const DeepSyntaxTree& tree);

/// Pre-order lemma list.
TokenSequence tree_lemmas(const DeepSyntaxTree& tree);

}  // namespace seqnlg
