#include "seqnlg/synthesis.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "seqnlg/errors.hpp"
#include "seqnlg/random.hpp"
#include "seqnlg/syntax_tree.hpp"
#include "seqnlg/text.hpp"

namespace seqnlg {

using nlohmann::json;

namespace {

std::vector<std::string> split(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

void replace_all(std::string& s, const std::string& from, const std::string& to) {
  for (std::size_t pos = 0; (pos = s.find(from, pos)) != std::string::npos; pos += to.size()) {
    s.replace(pos, from.size(), to);
  }
}

bool is_macro(const std::string& tok) { return tok.size() > 2 && tok.front() == '<' && tok.back() == '>'; }

std::pair<std::string, std::string> macro_parts(const std::string& tok) {
  const std::string body = tok.substr(1, tok.size() - 2);
  const auto colon = body.find(':');
  if (colon == std::string::npos) return {body, ""};
  return {body.substr(0, colon), body.substr(colon + 1)};
}

// Collects referenced slots; `required` gets those outside optional groups.
void scan(const std::vector<std::string>& toks, std::set<std::string>& referenced,
          std::set<std::string>& required, const Grammar& g) {
  int depth = 0;
  for (const auto& tok : toks) {
    if (tok == "[") {
      ++depth;
    } else if (tok == "]") {
      if (--depth < 0) throw DataError("grammar template has an unbalanced ']'");
    } else if (is_macro(tok)) {
      auto [slot, variant] = macro_parts(tok);
      auto fs = g.fragments.find(slot);
      if (fs == g.fragments.end() || !fs->second.contains(variant)) {
        throw DataError("grammar template uses unknown fragment " + tok);
      }
      referenced.insert(slot);
      if (depth == 0 && !fs->second.at(variant).fallback) required.insert(slot);
    }
  }
  if (depth != 0) throw DataError("grammar template has an unclosed '['");
}

using SlotValues = std::map<std::string, std::vector<std::string>>;

std::vector<std::string> fragment_tokens(const Fragment& f, const std::vector<std::string>& values, bool tree) {
  std::vector<std::string> out;
  if (values.empty()) {
    return split(tree ? f.fallback->tree : f.fallback->string);
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0 && !tree && !f.join.empty()) out.push_back(f.join);
    const auto ov = f.overrides.find(values[i]);
    std::string text = ov != f.overrides.end() ? (tree ? ov->second.tree : ov->second.string)
                                               : (tree ? f.base.tree : f.base.string);
    replace_all(text, "{v}", lower(values[i]));
    for (auto& w : split(text)) out.push_back(std::move(w));
  }
  return out;
}

// Expands toks[pos..] up to the matching "]" (or end); returns false if a
// slot inside is absent, which drops the enclosing optional group.
bool expand(const std::vector<std::string>& toks, std::size_t& pos, const Grammar& g, const SlotValues& vals,
            bool tree, std::vector<std::string>& out) {
  bool complete = true;
  while (pos < toks.size()) {
    const std::string& tok = toks[pos++];
    if (tok == "]") return complete;
    if (tok == "[") {
      std::vector<std::string> group;
      if (expand(toks, pos, g, vals, tree, group)) out.insert(out.end(), group.begin(), group.end());
      continue;
    }
    if (is_macro(tok)) {
      auto [slot, variant] = macro_parts(tok);
      const Fragment& f = g.fragments.at(slot).at(variant);
      auto it = vals.find(slot);
      const std::vector<std::string> none;
      const std::vector<std::string>& v = it == vals.end() ? none : it->second;
      if (v.empty() && !f.fallback) {
        complete = false;
        continue;
      }
      for (auto& w : fragment_tokens(f, v, tree)) out.push_back(std::move(w));
      continue;
    }
    out.push_back(tok);
  }
  return complete;
}

FragmentText fragment_text(const json& j) {
  return {j.at("string").get<std::string>(), j.at("tree").get<std::string>()};
}

}  // namespace

Grammar Grammar::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open grammar " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

Grammar Grammar::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("grammar: ") + e.what());
  }
  if (!j.is_object() || j.value("version", 0) != kVersion) throw DataError("grammar: unsupported or missing version");
  Grammar g;
  try {
    g.act = j.value("act", std::string("inform"));
    g.slot_order = j.at("slot_order").get<std::vector<std::string>>();
    for (const auto& [slot, spec] : j.at("slots").items()) {
      SlotSpec s;
      s.values = spec.at("values").get<std::vector<std::string>>();
      s.probability = spec.value("probability", 1.0);
      s.max_values = spec.value("max_values", std::size_t{1});
      s.extra_probability = spec.value("second_probability", 0.0);
      if (s.values.empty() || s.max_values == 0) throw DataError("grammar: slot '" + slot + "' has no values");
      g.slots.emplace(slot, std::move(s));
    }
    for (const auto& slot : g.slot_order) {
      if (!g.slots.contains(slot)) throw DataError("grammar: slot_order names unknown slot '" + slot + "'");
    }
    for (const auto& [slot, variants] : j.at("fragments").items()) {
      for (const auto& [variant, spec] : variants.items()) {
        Fragment f;
        f.base = fragment_text(spec);
        f.join = spec.value("join", std::string());
        if (spec.contains("overrides")) {
          for (const auto& [value, o] : spec.at("overrides").items()) f.overrides.emplace(value, fragment_text(o));
        }
        if (spec.contains("default")) f.fallback = fragment_text(spec.at("default"));
        g.fragments[slot].emplace(variant, std::move(f));
      }
    }
    if (j.contains("unrealized")) g.unrealized = j.at("unrealized").get<std::set<std::string>>();
    for (const auto& t : j.at("templates")) {
      SentenceTemplate st;
      st.string_tokens = split(t.at("string").get<std::string>());
      st.tree_tokens = split(t.at("tree").get<std::string>());
      std::set<std::string> tree_ref;
      std::set<std::string> tree_req;
      scan(st.string_tokens, st.referenced, st.required, g);
      scan(st.tree_tokens, tree_ref, tree_req, g);
      if (tree_ref != st.referenced || tree_req != st.required) {
        throw DataError("grammar: template string and tree forms use different slots: " +
                        t.at("string").get<std::string>());
      }
      g.templates.push_back(std::move(st));
    }
    if (j.contains("lexicon")) g.lexicon = j.at("lexicon").get<std::map<std::string, std::vector<std::string>>>();
  } catch (const json::exception& e) {
    throw DataError(std::string("grammar: ") + e.what());
  }
  if (g.templates.empty()) throw DataError("grammar has no templates");
  return g;
}

double Grammar::da_space_size() const {
  double total = 1.0;
  for (const auto& slot : slot_order) {
    const SlotSpec& s = slots.at(slot);
    double options = s.probability >= 1.0 ? 0.0 : 1.0;  // absent
    double choose = 1.0;
    for (std::size_t k = 1; k <= std::min(s.max_values, s.values.size()); ++k) {
      choose = choose * static_cast<double>(s.values.size() - k + 1) / static_cast<double>(k);
      options += choose;
    }
    total *= options;
  }
  return total;
}

std::optional<Paraphrase> apply_template(const Grammar& g, const SentenceTemplate& t, const DialogueAct& da) {
  SlotValues vals;
  for (const auto& item : da.items()) {
    if (!item.slot.empty() && !g.unrealized.contains(item.slot)) vals[item.slot].push_back(item.value);
  }
  for (const auto& [slot, v] : vals) {
    if (!t.referenced.contains(slot)) return std::nullopt;
  }
  for (const auto& slot : t.required) {
    if (!vals.contains(slot)) return std::nullopt;
  }
  std::vector<std::string> words;
  std::vector<std::string> tree;
  std::size_t pos = 0;
  expand(t.string_tokens, pos, g, vals, false, words);
  pos = 0;
  expand(t.tree_tokens, pos, g, vals, true, tree);
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (words[i] != "{a}") continue;
    const bool vowel = i + 1 < words.size() && !words[i + 1].empty() &&
                       std::string_view("aeiou").find(words[i + 1][0]) != std::string_view::npos;
    words[i] = vowel ? "an" : "a";
  }
  TreeParse parsed = bracketed_to_tree(tree);
  if (parsed.recoveries != 0) throw DataError("grammar template produced a malformed tree");
  return Paraphrase{detokenize(words), format_bracketed(parsed.tree)};
}

std::vector<CorpusEntry> synthesize_corpus(const Grammar& g, std::size_t n_das, std::uint64_t seed) {
  if (g.da_space_size() < static_cast<double>(n_das)) {
    throw DataError("grammar can produce only " + std::to_string(static_cast<long long>(g.da_space_size())) +
                    " distinct DAs, " + std::to_string(n_das) + " requested");
  }
  Rng rng(seed);
  std::vector<CorpusEntry> out;
  std::unordered_set<std::string> seen;
  const std::size_t max_attempts = 1000 * n_das + 1000;
  for (std::size_t attempt = 0; out.size() < n_das; ++attempt) {
    if (attempt >= max_attempts) throw DataError("could not draw enough distinct DAs from the grammar");
    std::vector<DaItem> items;
    for (const auto& slot : g.slot_order) {
      const SlotSpec& s = g.slots.at(slot);
      if (!rng.bernoulli(s.probability)) continue;
      std::vector<std::size_t> picked{rng.index(s.values.size())};
      while (picked.size() < std::min(s.max_values, s.values.size()) && rng.bernoulli(s.extra_probability)) {
        const std::size_t k = rng.index(s.values.size());
        if (std::find(picked.begin(), picked.end(), k) == picked.end()) picked.push_back(k);
      }
      std::sort(picked.begin(), picked.end());
      for (std::size_t k : picked) items.push_back({g.act, slot, s.values[k]});
    }
    DialogueAct da(std::move(items));
    if (!seen.insert(da.to_string()).second) continue;

    std::vector<std::size_t> order(g.templates.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);
    std::vector<Paraphrase> chosen;
    for (std::size_t ti : order) {
      auto p = apply_template(g, g.templates[ti], da);
      if (!p) continue;
      if (!chosen.empty() && chosen.front().text == p->text) continue;
      chosen.push_back(std::move(*p));
      if (chosen.size() == 2) break;
    }
    if (chosen.size() < 2) throw DataError("grammar has fewer than two templates for DA " + da.to_string());

    CorpusEntry e;
    e.id = out.size();
    e.da = da;
    for (const auto& p : chosen) {
      e.refs.push_back(p.text);
      DeepSyntaxTree tree = parse_bracketed(p.tree).tree;
      tree.lowercase();
      e.trees.push_back(std::move(tree));
    }
    for (const auto& item : da.items()) {
      auto lex = g.lexicon.find(item.value);
      if (lex != g.lexicon.end() && !lex->second.empty()) {
        e.lex[item.value] = lex->second[rng.index(lex->second.size())];
      }
    }
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace seqnlg
