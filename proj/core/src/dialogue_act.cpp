#include "seqnlg/dialogue_act.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <utility>

#include "seqnlg/errors.hpp"

namespace seqnlg {

namespace {

constexpr std::string_view kActPrefix = "act:";
constexpr std::string_view kSlotPrefix = "slot:";
constexpr std::string_view kValuePrefix = "val:";
constexpr std::string_view kNone = "<none>";

bool is_name_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '+' ||
         c == '.' || c == '\'';
}

bool needs_quotes(std::string_view v) {
  if (v.empty()) return false;
  if (std::isspace(static_cast<unsigned char>(v.front())) ||
      std::isspace(static_cast<unsigned char>(v.back())))
    return true;
  return std::any_of(v.begin(), v.end(), [](char c) {
    return c == ',' || c == '(' || c == ')' || c == '=' || c == '&' || c == '"' || c == '\\' ||
           c == ' ' || c == '*';
  });
}

std::string quote(std::string_view v) {
  std::string out = "\"";
  for (char c : v) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

class DaParser {
 public:
  explicit DaParser(std::string_view text) : text_(text) {}

  DialogueAct parse() {
    std::vector<DaItem> items;
    skip_ws();
    if (at_end()) fail("empty dialogue act");
    while (true) {
      parse_group(items);
      skip_ws();
      if (at_end()) break;
      if (peek() != '&') fail("expected '&' between acts");
      ++pos_;
      skip_ws();
    }
    try {
      return DialogueAct(std::move(items));
    } catch (const DataError& e) {
      throw ParseError(e.what(), pos_);
    }
  }

 private:
  [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, pos_); }
  bool at_end() const { return pos_ >= text_.size(); }
  char peek() const { return text_[pos_]; }
  void skip_ws() {
    while (!at_end() && std::isspace(static_cast<unsigned char>(peek()))) ++pos_;
  }

  std::string parse_name(const char* what) {
    const std::size_t start = pos_;
    while (!at_end() && is_name_char(peek())) ++pos_;
    if (pos_ == start) fail(std::string("expected ") + what);
    return std::string(text_.substr(start, pos_ - start));
  }

  std::string parse_value() {
    skip_ws();
    if (at_end()) fail("unterminated slot value");
    if (peek() == '"') {
      ++pos_;
      std::string out;
      while (true) {
        if (at_end()) fail("unterminated quoted value");
        char c = peek();
        ++pos_;
        if (c == '"') break;
        if (c == '\\') {
          if (at_end()) fail("dangling escape in quoted value");
          c = peek();
          ++pos_;
        }
        out += c;
      }
      return out;
    }
    const std::size_t start = pos_;
    while (!at_end() && peek() != ',' && peek() != ')') {
      const char c = peek();
      if (c == '(' || c == '=' || c == '&' || c == '"') fail("unexpected character in value");
      ++pos_;
    }
    std::string_view v = text_.substr(start, pos_ - start);
    while (!v.empty() && std::isspace(static_cast<unsigned char>(v.back()))) v.remove_suffix(1);
    if (v.empty()) fail("empty slot value after '='");
    return std::string(v);
  }

  void parse_group(std::vector<DaItem>& items) {
    const std::string act = parse_name("act type");
    skip_ws();
    if (at_end() || peek() != '(') fail("expected '(' after act type '" + act + "'");
    ++pos_;
    skip_ws();
    if (at_end()) fail("unbalanced parentheses");
    if (peek() == ')') fail("act '" + act + "' has no slots and no slot-less marker");
    if (text_.substr(pos_, DialogueAct::kSlotlessMarker.size()) == DialogueAct::kSlotlessMarker) {
      pos_ += DialogueAct::kSlotlessMarker.size();
      items.push_back({act, "", ""});
      skip_ws();
      if (at_end() || peek() != ')') fail("expected ')' after slot-less marker");
      ++pos_;
      return;
    }
    while (true) {
      skip_ws();
      DaItem item{act, parse_name("slot name"), ""};
      skip_ws();
      if (!at_end() && peek() == '=') {
        ++pos_;
        item.value = parse_value();
        skip_ws();
      }
      items.push_back(std::move(item));
      if (at_end()) fail("unbalanced parentheses");
      if (peek() == ')') {
        ++pos_;
        return;
      }
      if (peek() != ',') fail("expected ',' or ')' in slot list");
      ++pos_;
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

std::string strip_prefix(const std::string& token, std::string_view prefix) {
  if (token.compare(0, prefix.size(), prefix) != 0) {
    throw DataError("DA token '" + token + "' lacks prefix '" + std::string(prefix) + "'");
  }
  std::string rest = token.substr(prefix.size());
  return rest == kNone ? std::string() : rest;
}

}  // namespace

DialogueAct::DialogueAct(std::vector<DaItem> items) : items_(std::move(items)) {
  if (items_.empty()) throw DataError("dialogue act needs at least one triple");
  std::set<std::pair<std::string, std::string>> seen;
  for (const DaItem& it : items_) {
    if (it.act_type.empty()) throw DataError("dialogue act triple with empty act type");
    if (it.slot.empty() && !it.value.empty()) {
      throw DataError("value '" + it.value + "' without a slot");
    }
    if (it.slotless()) continue;
    if (!seen.emplace(it.slot, it.value).second) {
      throw DataError("duplicate slot-value pair " + it.slot + "=" + it.value);
    }
  }
}

std::string DialogueAct::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < items_.size(); ++i) {
    const DaItem& it = items_[i];
    const bool opens = i == 0 || items_[i - 1].act_type != it.act_type || it.slotless() ||
                       items_[i - 1].slotless();
    if (opens) {
      if (i) out += ")&";
      out += it.act_type + "(";
    } else {
      out += ", ";
    }
    if (it.slotless()) {
      out += kSlotlessMarker;
      continue;
    }
    out += it.slot;
    if (!it.value.empty()) out += "=" + (needs_quotes(it.value) ? quote(it.value) : it.value);
  }
  if (!items_.empty()) out += ")";
  return out;
}

DialogueAct DialogueAct::canonically_sorted() const {
  std::vector<DaItem> sorted = items_;
  std::stable_sort(sorted.begin(), sorted.end());
  return DialogueAct(std::move(sorted));
}

std::vector<std::string> DialogueAct::act_types() const {
  std::vector<std::string> out;
  for (const DaItem& it : items_) {
    if (std::find(out.begin(), out.end(), it.act_type) == out.end()) out.push_back(it.act_type);
  }
  return out;
}

DialogueAct parse_da(std::string_view text) { return DaParser(text).parse(); }

std::string slot_value_class(const DaItem& item) { return item.slot + "=" + item.value; }

TokenSequence encode_da(const DialogueAct& da) {
  TokenSequence out;
  out.reserve(3 * da.size());
  for (const DaItem& it : da.items()) {
    out.push_back(std::string(kActPrefix) + it.act_type);
    out.push_back(std::string(kSlotPrefix) + (it.slot.empty() ? std::string(kNone) : it.slot));
    out.push_back(std::string(kValuePrefix) + (it.value.empty() ? std::string(kNone) : it.value));
  }
  return out;
}

DialogueAct decode_da_tokens(const TokenSequence& tokens) {
  if (tokens.size() % 3 != 0) {
    throw DataError("DA token sequence length " + std::to_string(tokens.size()) +
                    " is not a multiple of 3");
  }
  std::vector<DaItem> items;
  for (std::size_t i = 0; i < tokens.size(); i += 3) {
    items.push_back({strip_prefix(tokens[i], kActPrefix), strip_prefix(tokens[i + 1], kSlotPrefix),
                     strip_prefix(tokens[i + 2], kValuePrefix)});
  }
  return DialogueAct(std::move(items));
}

}  // namespace seqnlg
