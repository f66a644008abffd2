#include "seqnlg/text.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cctype>
#include <vector>

namespace seqnlg {

namespace {

bool is_punct(char c) {
  switch (c) {
    case '.': case ',': case '!': case '?': case ';': case ':':
    case '(': case ')': case '"':
      return true;
    default:
      return false;
  }
}

bool is_attaching_punct(std::string_view tok) {
  return tok == "." || tok == "," || tok == "!" || tok == "?" || tok == ";" || tok == ":" ||
         tok == ")";
}

bool is_terminal(std::string_view tok) { return tok == "." || tok == "!" || tok == "?"; }

std::string lowercase(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

void push_word(TokenSequence& out, std::string word, const PluralLexicon& plurals) {
  if (word.size() > 1 && word.back() == 's') {
    std::string_view stem(word.data(), word.size() - 1);
    if (plurals.contains(stem)) {
      out.emplace_back(stem);
      out.emplace_back(kPluralToken);
      return;
    }
  }
  out.push_back(std::move(word));
}

}  // namespace

bool is_placeholder(std::string_view token) {
  if (token.empty() || (token[0] != 'X' && token[0] != 'x')) return false;
  if (token.size() == 1) return true;
  if (token[1] != '-' || token.size() == 2) return false;
  for (std::size_t i = 2; i < token.size(); ++i) {
    if (!is_alnum(token[i]) && token[i] != '_') return false;
  }
  return true;
}

TokenSequence tokenize_sentence(std::string_view text, const PluralLexicon& plurals) {
  TokenSequence out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    const std::size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (start == i) break;
    std::string_view chunk = text.substr(start, i - start);
    std::size_t lead = 0;
    while (lead < chunk.size() && is_punct(chunk[lead])) ++lead;
    std::size_t trail = chunk.size();
    while (trail > lead && is_punct(chunk[trail - 1])) --trail;
    for (std::size_t k = 0; k < lead; ++k) out.emplace_back(1, chunk[k]);
    if (trail > lead) push_word(out, lowercase(chunk.substr(lead, trail - lead)), plurals);
    for (std::size_t k = trail; k < chunk.size(); ++k) out.emplace_back(1, chunk[k]);
  }
  return out;
}

std::string detokenize(const TokenSequence& tokens) {
  std::string out;
  bool sentence_start = true;
  bool have_word = false;
  for (const std::string& tok : tokens) {
    if (tok == kPluralToken) {
      if (have_word) {
        out += 's';
        continue;
      }
      spdlog::warn("detokenize: plural token without a preceding word left verbatim");
    }
    std::string word = tok;
    if (is_placeholder(word)) word[0] = 'X';
    const bool attach = is_attaching_punct(word) && !out.empty();
    if (!attach && !out.empty()) out += ' ';
    if (sentence_start && !word.empty() && std::isalpha(static_cast<unsigned char>(word[0]))) {
      word[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(word[0])));
      sentence_start = false;
    }
    out += word;
    have_word = !word.empty() && is_alnum(word.back());
    if (is_terminal(word)) sentence_start = true;
  }
  return out;
}

Relexicalized relexicalize(std::string_view text, const DialogueAct& da, const LexicalMap& lex) {
  std::vector<std::string> ordered;
  for (const DaItem& it : da.items()) {
    if (is_placeholder(it.value) && it.value.size() > 1 &&
        std::find(ordered.begin(), ordered.end(), it.value) == ordered.end()) {
      ordered.push_back(it.value);
    }
  }
  Relexicalized result;
  std::size_t next_bare = 0;
  std::size_t i = 0;
  while (i < text.size()) {
    const bool boundary_before = i == 0 || !is_alnum(text[i - 1]);
    if (text[i] == 'X' && boundary_before) {
      std::size_t j = i + 1;
      if (j + 1 < text.size() && text[j] == '-' && (is_alnum(text[j + 1]) || text[j + 1] == '_')) {
        j += 1;
        while (j < text.size() && (is_alnum(text[j]) || text[j] == '_')) ++j;
      }
      if (j >= text.size() || !is_alnum(text[j])) {
        std::string placeholder(text.substr(i, j - i));
        if (placeholder == "X") {
          if (next_bare < ordered.size()) placeholder = ordered[next_bare];
          ++next_bare;
        }
        auto hit = lex.find(placeholder);
        if (hit != lex.end()) {
          result.text += hit->second;
        } else {
          result.text.append(text.substr(i, j - i));
          ++result.unresolved;
        }
        i = j;
        continue;
      }
    }
    result.text += text[i];
    ++i;
  }
  return result;
}

}  // namespace seqnlg
