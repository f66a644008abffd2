#include "seqnlg/corpus.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <istream>
#include <ostream>

#include "seqnlg/errors.hpp"

namespace seqnlg {

using nlohmann::json;

namespace {

DeepSyntaxTree parse_tree_field(const std::string& text, std::size_t line) {
  TreeParse parsed = parse_bracketed(text);
  if (parsed.recoveries != 0) {
    throw DataError("corpus line " + std::to_string(line) + ": malformed tree (" +
                    parsed.diagnostics.front() + ")");
  }
  parsed.tree.lowercase();
  parsed.tree.validate();
  return std::move(parsed.tree);
}

CorpusEntry parse_entry(const std::string& text, std::size_t line, std::size_t id) {
  const std::string where = "corpus line " + std::to_string(line) + ": ";
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(where + e.what());
  }
  if (!j.is_object() || !j.contains("da") || !j["da"].is_string()) {
    throw DataError(where + "object with a string \"da\" field expected");
  }
  CorpusEntry entry;
  entry.id = id;
  try {
    entry.da = parse_da(j["da"].get<std::string>());
  } catch (const ParseError& e) {
    throw DataError(where + e.what());
  }
  if (!j.contains("refs") || !j["refs"].is_array() || j["refs"].empty()) {
    throw DataError(where + "non-empty \"refs\" array expected");
  }
  for (const json& r : j["refs"]) {
    if (!r.is_string()) throw DataError(where + "references must be strings");
    entry.refs.push_back(r.get<std::string>());
  }
  try {
    if (j.contains("tree") && !j["tree"].is_null()) {
      const json& t = j["tree"];
      if (t.is_string()) {
        DeepSyntaxTree tree = parse_tree_field(t.get<std::string>(), line);
        entry.trees.assign(entry.refs.size(), tree);
      } else if (t.is_array()) {
        if (t.size() != entry.refs.size()) throw DataError(where + "one tree per reference expected");
        for (const json& ti : t) {
          if (!ti.is_string()) throw DataError(where + "trees must be bracketed strings");
          entry.trees.push_back(parse_tree_field(ti.get<std::string>(), line));
        }
      } else {
        throw DataError(where + "\"tree\" must be a string or an array of strings");
      }
    }
  } catch (const ParseError& e) {
    throw DataError(where + e.what());
  }
  if (j.contains("lex") && !j["lex"].is_null()) {
    if (!j["lex"].is_object()) throw DataError(where + "\"lex\" must be an object");
    for (const auto& [k, v] : j["lex"].items()) {
      if (!v.is_string()) throw DataError(where + "lexical map values must be strings");
      entry.lex.emplace(k, v.get<std::string>());
    }
  }
  return entry;
}

}  // namespace

std::vector<CorpusEntry> read_corpus(std::istream& in) {
  std::vector<CorpusEntry> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    entries.push_back(parse_entry(line, line_no, entries.size()));
  }
  return entries;
}

std::vector<CorpusEntry> load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus " + path.string());
  return read_corpus(in);
}

void write_corpus(std::ostream& out, std::span<const CorpusEntry> entries) {
  for (const CorpusEntry& e : entries) {
    json j;
    j["da"] = e.da.to_string();
    j["refs"] = e.refs;
    if (e.has_trees()) {
      json trees = json::array();
      for (const DeepSyntaxTree& t : e.trees) trees.push_back(format_bracketed(t));
      j["tree"] = std::move(trees);
    }
    if (!e.lex.empty()) j["lex"] = e.lex;
    out << j.dump() << '\n';
  }
}

void save_corpus(const std::filesystem::path& path, std::span<const CorpusEntry> entries) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write corpus " + path.string());
  write_corpus(out, entries);
}

}  // namespace seqnlg
