#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "seqnlg/dialogue_act.hpp"
#include "seqnlg/syntax_tree.hpp"
#include "seqnlg/text.hpp"

namespace seqnlg {

/// One dialogue act with its reference paraphrases.
///
/// JSONL form, one object per line:
///   {"da": "...", "refs": ["...", "..."], "tree": "( ... )" | ["( ... )", ...],
///    "lex": {"X-name": "..."}}
/// "tree" and "lex" are optional. A single tree string applies to every
/// reference; an array gives one tree per reference.
struct CorpusEntry {
  std::size_t id = 0;  // zero-based line index among non-blank lines
  DialogueAct da;
  std::vector<std::string> refs;
  std::vector<DeepSyntaxTree> trees;  // empty, or one per reference
  LexicalMap lex;

  bool has_trees() const noexcept { return !trees.empty(); }
};

/// Parses JSONL. Throws DataError naming the offending line.
std::vector<CorpusEntry> read_corpus(std::istream& in);
std::vector<CorpusEntry> load_corpus(const std::filesystem::path& path);

/// Writes JSONL with sorted keys and LF line endings (byte-stable).
void write_corpus(std::ostream& out, std::span<const CorpusEntry> entries);
void save_corpus(const std::filesystem::path& path, std::span<const CorpusEntry> entries);

}  // namespace seqnlg
