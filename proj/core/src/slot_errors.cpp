#include "seqnlg/slot_errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <sstream>

#include "seqnlg/errors.hpp"

namespace seqnlg::eval {

using nlohmann::json;

namespace {

bool matches_at(const TokenSequence& tokens, std::size_t pos, const TokenSequence& pattern) {
  if (pattern.empty() || pos + pattern.size() > tokens.size()) return false;
  return std::equal(pattern.begin(), pattern.end(), tokens.begin() + pos);
}

void add_all(std::vector<std::string>& dst, const std::vector<std::string>& src) {
  dst.insert(dst.end(), src.begin(), src.end());
}

}  // namespace

SlotPatternLexicon SlotPatternLexicon::from_json_text(const std::string& text,
                                                      const PluralLexicon& plurals) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("slot lexicon: ") + e.what());
  }
  if (j.value("version", 0) != 1) throw DataError("slot lexicon: unsupported or missing version");
  SlotPatternLexicon lex;
  const json patterns = j.value("patterns", json::object());
  const json tree_patterns = j.value("tree_patterns", json::object());
  const json unrealized = j.value("unrealized", json::array());
  try {
    for (const auto& [cls, list] : patterns.items()) {
      if (!list.is_array() || list.empty()) {
        throw DataError("slot lexicon: class '" + cls + "' has no patterns");
      }
      for (const json& p : list) lex.add_pattern(cls, tokenize_sentence(p.get<std::string>(), plurals));
    }
    for (const auto& [cls, list] : tree_patterns.items()) {
      for (const json& p : list) {
        lex.add_tree_pattern(cls, tokenize_sentence(p.get<std::string>(), plurals));
      }
    }
    for (const json& cls : unrealized) lex.mark_unrealized(cls.get<std::string>());
  } catch (const json::exception& e) {
    throw DataError(std::string("slot lexicon: ") + e.what());
  }
  return lex;
}

SlotPatternLexicon SlotPatternLexicon::load(const std::filesystem::path& path,
                                            const PluralLexicon& plurals) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open slot lexicon " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json_text(buf.str(), plurals);
}

void SlotPatternLexicon::add_pattern(const std::string& cls, TokenSequence pattern) {
  if (pattern.empty()) throw DataError("slot lexicon: empty pattern for '" + cls + "'");
  patterns_[cls].push_back(std::move(pattern));
}

void SlotPatternLexicon::add_tree_pattern(const std::string& cls, TokenSequence pattern) {
  if (pattern.empty()) throw DataError("slot lexicon: empty tree pattern for '" + cls + "'");
  tree_patterns_[cls].push_back(std::move(pattern));
}

void SlotPatternLexicon::mark_unrealized(const std::string& cls) { unrealized_.insert(cls); }

bool SlotPatternLexicon::knows(const std::string& cls) const {
  return patterns_.contains(cls) || unrealized_.contains(cls);
}

void SlotPatternLexicon::check_covers(std::span<const std::string> classes) const {
  for (const std::string& cls : classes) {
    if (!knows(cls)) throw DataError("slot lexicon has no pattern for class '" + cls + "'");
  }
}

std::map<std::string, std::size_t> SlotPatternLexicon::match(const TokenSequence& tokens,
                                                             bool tree) const {
  std::map<std::string, std::size_t> found;
  std::size_t pos = 0;
  while (pos < tokens.size()) {
    const std::string* best_cls = nullptr;
    std::size_t best_len = 0;
    for (const auto& [cls, surface] : patterns_) {
      const std::vector<TokenSequence>* list = &surface;
      if (tree) {
        auto t = tree_patterns_.find(cls);
        if (t != tree_patterns_.end()) list = &t->second;
      }
      for (const TokenSequence& p : *list) {
        if (p.size() > best_len && matches_at(tokens, pos, p)) {
          best_len = p.size();
          best_cls = &cls;
        }
      }
    }
    if (best_cls) {
      ++found[*best_cls];
      pos += best_len;
    } else {
      ++pos;
    }
  }
  return found;
}

SlotErrors& SlotErrors::operator+=(const SlotErrors& o) {
  missing += o.missing;
  superfluous += o.superfluous;
  repeated += o.repeated;
  add_all(missing_classes, o.missing_classes);
  add_all(superfluous_classes, o.superfluous_classes);
  add_all(repeated_classes, o.repeated_classes);
  return *this;
}

namespace {

SlotErrors compare(const std::map<std::string, std::size_t>& found, const DialogueAct& da,
                   const SlotPatternLexicon& lex) {
  std::set<std::string> expected;
  for (const DaItem& it : da.items()) {
    if (it.slot.empty() || it.value.empty()) continue;
    const std::string cls = slot_value_class(it);
    if (!lex.knows(cls)) throw DataError("slot lexicon has no pattern for class '" + cls + "'");
    if (!lex.is_unrealized(cls)) expected.insert(cls);
  }
  SlotErrors e;
  for (const std::string& cls : expected) {
    auto it = found.find(cls);
    const std::size_t n = it == found.end() ? 0 : it->second;
    if (n == 0) {
      ++e.missing;
      e.missing_classes.push_back(cls);
    } else if (n > 1) {
      e.repeated += n - 1;
      e.repeated_classes.push_back(cls);
    }
  }
  for (const auto& [cls, n] : found) {
    if (expected.contains(cls) || lex.is_unrealized(cls)) continue;
    e.superfluous += n;
    e.superfluous_classes.push_back(cls);
  }
  return e;
}

}  // namespace

SlotErrors slot_errors(const TokenSequence& output, const DialogueAct& da,
                       const SlotPatternLexicon& lex) {
  return compare(lex.match(output, false), da, lex);
}

SlotErrors slot_errors(const DeepSyntaxTree& output, const DialogueAct& da,
                       const SlotPatternLexicon& lex) {
  return compare(lex.match(tree_lemmas(output), true), da, lex);
}

}  // namespace seqnlg::eval
