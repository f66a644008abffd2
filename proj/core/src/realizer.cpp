#include "seqnlg/realizer.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "seqnlg/errors.hpp"

namespace seqnlg {

using nlohmann::json;

namespace {

Placement parse_placement(const std::string& s) {
  if (s == "before") return Placement::before;
  if (s == "after") return Placement::after;
  throw DataError("realizer rules: placement must be before|after, got '" + s + "'");
}

Article parse_article(const std::string& s) {
  if (s == "none") return Article::none;
  if (s == "indefinite") return Article::indefinite;
  if (s == "definite") return Article::definite;
  throw DataError("realizer rules: article must be none|indefinite|definite, got '" + s + "'");
}

VerbForm parse_verb_form(const std::string& s) {
  if (s == "none") return VerbForm::none;
  if (s == "finite") return VerbForm::finite;
  if (s == "gerund") return VerbForm::gerund;
  if (s == "participle") return VerbForm::participle;
  throw DataError("realizer rules: verb_form must be none|finite|gerund|participle, got '" + s + "'");
}

std::vector<std::string> split_words(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

std::string lowercase(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

bool starts_with_vowel(const std::string& w) {
  return !w.empty() && std::string_view("aeiou").find(w[0]) != std::string_view::npos;
}

class Linearizer {
 public:
  Linearizer(const RealizationRules& rules, Realization& out) : rules_(rules), out_(out) {}

  TokenSequence node(const DeepSyntaxNode& n) {
    std::string wildcard;
    const FormemeRule* rule = rules_.find(n.formeme, &wildcard);
    static const FormemeRule kFallback;
    if (!rule) {
      ++out_.fallbacks;
      out_.trace.push_back(n.lemma + " " + n.formeme + " -> bare lemma");
      rule = &kFallback;
    } else {
      out_.trace.push_back(n.lemma + " " + n.formeme + " -> rule");
    }

    TokenSequence before;
    TokenSequence after;
    const DeepSyntaxNode* prev[2] = {nullptr, nullptr};
    for (const auto& child : n.children) {
      const FormemeRule* child_rule = rules_.find(child.formeme);
      const Placement place = child_rule ? child_rule->placement : Placement::after;
      TokenSequence& side = place == Placement::before ? before : after;
      const DeepSyntaxNode*& last = prev[place == Placement::before ? 0 : 1];
      if (last && child_rule && child_rule->conjoin && last->formeme == child.formeme) {
        side.push_back(rules_.conjunction);
      }
      TokenSequence words = node(child);
      side.insert(side.end(), words.begin(), words.end());
      last = &child;
    }

    TokenSequence head = head_words(n, *rule);
    TokenSequence phrase = before;
    phrase.insert(phrase.end(), head.begin(), head.end());
    phrase.insert(phrase.end(), after.begin(), after.end());

    TokenSequence result;
    for (const auto& p : rule->prefix) result.push_back(p == "*" ? wildcard : p);
    if (takes_article(n, *rule) && !phrase.empty()) {
      if (rule->article == Article::definite) {
        result.push_back("the");
      } else {
        result.push_back(starts_with_vowel(phrase.front()) ? "an" : "a");
      }
    }
    result.insert(result.end(), phrase.begin(), phrase.end());
    return result;
  }

 private:
  bool takes_article(const DeepSyntaxNode& n, const FormemeRule& rule) const {
    if (rule.article == Article::none || rule.verb_form != VerbForm::none) return false;
    if (is_placeholder(n.lemma) || rules_.pronouns.contains(n.lemma)) return false;
    if (rule.article == Article::indefinite &&
        ((!rule.singular && rules_.always_plural.contains(n.lemma)) || rules_.mass_nouns.contains(n.lemma))) {
      return false;
    }
    return true;
  }

  TokenSequence head_words(const DeepSyntaxNode& n, const FormemeRule& rule) const {
    if (auto it = rules_.pronouns.find(n.lemma); it != rules_.pronouns.end()) return split_words(it->second);
    if (rule.verb_form == VerbForm::finite) {
      auto it = rules_.finite_forms.find(n.lemma);
      return it != rules_.finite_forms.end() ? split_words(it->second) : TokenSequence{n.lemma + "s"};
    }
    if (rule.verb_form == VerbForm::gerund) {
      auto it = rules_.gerund_forms.find(n.lemma);
      return it != rules_.gerund_forms.end() ? split_words(it->second) : TokenSequence{n.lemma + "ing"};
    }
    if (rule.verb_form == VerbForm::participle) {
      auto it = rules_.participle_forms.find(n.lemma);
      return it != rules_.participle_forms.end() ? split_words(it->second) : TokenSequence{n.lemma + "ed"};
    }
    if (!rule.singular && rules_.always_plural.contains(n.lemma)) return {n.lemma, std::string(kPluralToken)};
    return {n.lemma};
  }

  const RealizationRules& rules_;
  Realization& out_;
};

}  // namespace

const FormemeRule* RealizationRules::find(const std::string& raw, std::string* wildcard) const {
  const std::string formeme = lowercase(raw);
  if (auto it = formemes.find(formeme); it != formemes.end()) return &it->second;
  for (const auto& [key, rule] : formemes) {
    const auto star = key.find('*');
    if (star == std::string::npos) continue;
    const std::string_view head(key.data(), star);
    const std::string_view tail(key.data() + star + 1, key.size() - star - 1);
    if (formeme.size() > head.size() + tail.size() && formeme.starts_with(head) && formeme.ends_with(tail)) {
      if (wildcard) *wildcard = formeme.substr(head.size(), formeme.size() - head.size() - tail.size());
      return &rule;
    }
  }
  return nullptr;
}

RealizationRules RealizationRules::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open realizer rules " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

RealizationRules RealizationRules::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("realizer rules: ") + e.what());
  }
  if (!j.is_object() || !j.contains("version") || j.at("version") != kVersion) {
    throw DataError("realizer rules: expected version " + std::to_string(kVersion));
  }
  RealizationRules r;
  try {
    for (const auto& [formeme, spec] : j.at("formemes").items()) {
      FormemeRule rule;
      if (spec.contains("placement")) rule.placement = parse_placement(spec.at("placement").get<std::string>());
      if (spec.contains("prefix")) rule.prefix = spec.at("prefix").get<std::vector<std::string>>();
      if (spec.contains("article")) rule.article = parse_article(spec.at("article").get<std::string>());
      if (spec.contains("verb_form")) rule.verb_form = parse_verb_form(spec.at("verb_form").get<std::string>());
      if (spec.contains("conjoin")) rule.conjoin = spec.at("conjoin").get<bool>();
      if (spec.contains("singular")) rule.singular = spec.at("singular").get<bool>();
      if (std::count(formeme.begin(), formeme.end(), '*') > 1) {
        throw DataError("realizer rules: formeme key '" + formeme + "' has more than one '*'");
      }
      r.formemes.emplace(lowercase(formeme), std::move(rule));
    }
    auto map_field = [&](const char* key, std::map<std::string, std::string>& dst) {
      if (j.contains(key)) dst = j.at(key).get<std::map<std::string, std::string>>();
    };
    map_field("finite_forms", r.finite_forms);
    map_field("gerund_forms", r.gerund_forms);
    map_field("participle_forms", r.participle_forms);
    map_field("pronouns", r.pronouns);
    if (j.contains("always_plural")) r.always_plural = j.at("always_plural").get<std::set<std::string>>();
    if (j.contains("mass_nouns")) r.mass_nouns = j.at("mass_nouns").get<std::set<std::string>>();
    if (j.contains("plural_lexicon")) {
      for (const auto& w : j.at("plural_lexicon")) r.plural_lexicon.insert(w.get<std::string>());
    }
    if (j.contains("conjunction")) r.conjunction = j.at("conjunction").get<std::string>();
    if (j.contains("terminal")) r.terminal = j.at("terminal").get<std::string>();
  } catch (const json::exception& e) {
    throw DataError(std::string("realizer rules: ") + e.what());
  }
  return r;
}

Realization realize(const DeepSyntaxTree& tree, const RealizationRules& rules) {
  Realization out;
  if (tree.empty()) {
    spdlog::warn("realize: empty tree gives an empty sentence");
    return out;
  }
  Linearizer lin(rules, out);
  for (const auto& sentence : tree.children) {
    TokenSequence words = lin.node(sentence);
    if (words.empty()) continue;
    out.tokens.insert(out.tokens.end(), words.begin(), words.end());
    const std::string& last = words.back();
    if (last != "." && last != "!" && last != "?") out.tokens.push_back(rules.terminal);
  }
  out.text = detokenize(out.tokens);
  return out;
}

}  // namespace seqnlg
