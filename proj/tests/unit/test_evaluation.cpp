#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "seqnlg/bootstrap.hpp"
#include "seqnlg/dialogue_act.hpp"
#include "seqnlg/errors.hpp"
#include "seqnlg/metrics.hpp"
#include "seqnlg/random.hpp"
#include "seqnlg/slot_errors.hpp"
#include "seqnlg/text.hpp"

using namespace seqnlg;
using namespace seqnlg::eval;

namespace {

TokenSequence toks(const std::string& s) {
  std::istringstream in(s);
  TokenSequence out;
  for (std::string t; in >> t;) out.push_back(t);
  return out;
}

struct Golden {
  const char* name;
  std::vector<TokenSequence> hyps;
  std::vector<ReferenceSet> refs;
  double bleu;
  double nist;
};

// Values from tests/oracles/metrics_oracle.py.
std::vector<Golden> golden_cases() {
  return {
      {"clipping", {toks("the the the the the the the")}, {{toks("the cat is on the mat")}}, 0.0, 0.4528464288},
      {"partial",
       {toks("the cat sat on the mat today")},
       {{toks("the cat sat on the mat"), toks("a cat was sitting on the mat")}},
       80.9106711570,
       2.8187084489},
      {"brevity",
       {toks("x-name is a cheap italian restaurant")},
       {{toks("x-name is a cheap italian restaurant in the city centre")}},
       51.3417119033,
       1.1055745355},
      {"corpus",
       {toks("x-name serves french food near x-near ."), toks("there is a pub called x-name in riverside ."),
        toks("x-name is a moderate restaurant .")},
       {{toks("x-name serves french food near x-near ."), toks("x-name is near x-near and serves french food .")},
        {toks("x-name is a pub in riverside ."), toks("there is a pub called x-name in the riverside area .")},
        {toks("x-name is a moderately priced restaurant ."), toks("x-name is a restaurant with moderate prices .")}},
       80.1633401617,
       4.9927996246},
      {"two_sentence_self", {toks("a b c a"), toks("b c d")}, {{toks("a b c a")}, {toks("b c d")}}, 100.0, 3.2168787316},
      {"longer_hyp",
       {toks("x-name is a restaurant that serves chinese and indian food near x-near in riverside")},
       {{toks("x-name serves chinese and indian food near x-near ."),
         toks("x-name is a restaurant near x-near in riverside .")}},
       75.2958637319,
       3.8949669885},
      {"no_four_grams", {toks("a b c"), toks("b c")}, {{toks("a b c d")}, {toks("b c")}}, 81.8730753078, 1.5515383880},
  };
}

std::vector<TokenSequence> random_corpus(Rng& rng, std::size_t n) {
  const std::vector<std::string> words{"x-name", "is", "a", "cheap", "restaurant", "near", "x-near", "serves", "food", "."};
  std::vector<TokenSequence> out;
  for (std::size_t i = 0; i < n; ++i) {
    TokenSequence s;
    const std::size_t len = 4 + rng.index(8);
    for (std::size_t k = 0; k < len; ++k) s.push_back(words[rng.index(words.size())]);
    out.push_back(s);
  }
  return out;
}

SlotPatternLexicon test_lexicon() {
  return SlotPatternLexicon::from_json_text(R"({"version": 1,
    "patterns": {"name=X-name": ["x-name"], "near=X-near": ["x-near"], "food=French": ["french"],
                 "food=Italian": ["italian"], "eattype=restaurant": ["restaurant"],
                 "area=riverside": ["riverside"], "area=citycentre": ["city centre", "centre of town"]},
    "tree_patterns": {"area=citycentre": ["centre city"]},
    "unrealized": ["type=placetoeat"]})",
                                            PluralLexicon{"restaurant"});
}

std::vector<TokenSequence> refs_first(const std::vector<ReferenceSet>& refs) {
  std::vector<TokenSequence> out;
  for (const auto& r : refs) out.push_back(r.front());
  return out;
}

}  // namespace

TEST(Bleu, GoldenValuesFromTheOracle) {
  for (const auto& g : golden_cases()) {
    EXPECT_NEAR(bleu(g.hyps, g.refs), g.bleu, 1e-4) << g.name;
  }
}

TEST(Bleu, ClippingLimitsUnigramMatches) {
  const BleuStats s = bleu_stats(toks("the the the the the the the"), {toks("the cat is on the mat")});
  EXPECT_EQ(s.matches[0], 2u);
  EXPECT_EQ(s.totals[0], 7u);
  EXPECT_EQ(s.matches[1], 0u);
  EXPECT_EQ(bleu_score(s), 0.0);
}

TEST(Bleu, ClosestReferenceLengthPrefersShorterOnTies) {
  const BleuStats s = bleu_stats(toks("a b c d e"), {toks("a b c d e f g"), toks("a b c")});
  EXPECT_EQ(s.ref_length, 3u);
}

TEST(Bleu, TrivialCasesAndErrors) {
  const std::vector<TokenSequence> h{toks("a b c d")};
  EXPECT_DOUBLE_EQ(bleu(h, std::vector<ReferenceSet>{{toks("a b c d")}}), 100.0);
  EXPECT_DOUBLE_EQ(bleu(h, std::vector<ReferenceSet>{{toks("w x y z")}}), 0.0);
  EXPECT_DOUBLE_EQ(bleu(std::vector<TokenSequence>{toks("a")}, std::vector<ReferenceSet>{{toks("a")}}), 100.0);
  EXPECT_THROW(bleu(std::vector<TokenSequence>{}, std::vector<ReferenceSet>{}), std::invalid_argument);
  EXPECT_THROW(bleu(h, std::vector<ReferenceSet>{}), std::invalid_argument);
  EXPECT_THROW(bleu(h, std::vector<ReferenceSet>{{}}), std::invalid_argument);
}

TEST(Bleu, SelfScoreIsHundredAndOrderInvariant) {
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    auto corpus = random_corpus(rng, 12);
    std::vector<ReferenceSet> refs;
    for (const auto& s : corpus) refs.push_back({s});
    EXPECT_NEAR(bleu(corpus, refs), 100.0, 1e-9);

    auto hyps = random_corpus(rng, 12);
    const double base = bleu(hyps, refs);
    EXPECT_GE(base, 0.0);
    EXPECT_LE(base, 100.0);
    std::vector<std::size_t> order(hyps.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);
    std::vector<TokenSequence> ph;
    std::vector<ReferenceSet> pr;
    for (std::size_t i : order) {
      ph.push_back(hyps[i]);
      pr.push_back(refs[i]);
    }
    EXPECT_NEAR(bleu(ph, pr), base, 1e-9);
    // An extra identical reference changes nothing.
    auto doubled = refs;
    for (auto& r : doubled) r.push_back(r.front());
    EXPECT_NEAR(bleu(hyps, doubled), base, 1e-9);
  }
}

TEST(Nist, GoldenValuesFromTheOracle) {
  for (const auto& g : golden_cases()) {
    EXPECT_NEAR(nist(g.hyps, g.refs), g.nist, 1e-4) << g.name;
  }
}

TEST(Nist, InformationWeightsByHand) {
  // Corpus "a b c a" / "b c d": 7 words, unigram counts a2 b2 c2 d1.
  const std::vector<ReferenceSet> refs{{toks("a b c a")}, {toks("b c d")}};
  const NistScorer s(refs);
  EXPECT_NEAR(s.info(toks("a")), std::log2(7.0 / 2.0), 1e-12);
  EXPECT_NEAR(s.info(toks("d")), std::log2(7.0), 1e-12);
  EXPECT_NEAR(s.info(toks("b c")), 0.0, 1e-12);
  EXPECT_NEAR(s.info(toks("c d")), 1.0, 1e-12);
  EXPECT_EQ(s.info(toks("z")), 0.0);
}

TEST(Nist, InvariantUnderTokenRenaming) {
  Rng rng(10);
  auto hyps = random_corpus(rng, 8);
  auto refs_flat = random_corpus(rng, 16);
  std::vector<ReferenceSet> refs;
  for (std::size_t i = 0; i < 8; ++i) refs.push_back({refs_flat[2 * i], refs_flat[2 * i + 1]});
  auto rename = [](TokenSequence s) {
    for (auto& t : s) t = "w_" + t + "_" + std::to_string(t.size());
    return s;
  };
  std::vector<TokenSequence> rh;
  std::vector<ReferenceSet> rr;
  for (const auto& h : hyps) rh.push_back(rename(h));
  for (const auto& r : refs) rr.push_back({rename(r[0]), rename(r[1])});
  EXPECT_NEAR(nist(hyps, refs), nist(rh, rr), 1e-12);
  EXPECT_THROW(nist(std::vector<TokenSequence>{}, std::vector<ReferenceSet>{}), std::invalid_argument);
}

TEST(SlotErrors, GreedyStringOutputWithErrors) {
  const auto lex = test_lexicon();
  const DialogueAct da = parse_da("inform(name=X-name, type=placetoeat, eattype=restaurant, area=riverside, food=French)");
  const PluralLexicon plurals{"restaurant"};
  const SlotErrors e =
      slot_errors(tokenize_sentence("X-name is a restaurant in the riverside that serves italian food.", plurals), da, lex);
  EXPECT_EQ(e.missing_classes, (std::vector<std::string>{"food=French"}));
  EXPECT_EQ(e.superfluous_classes, (std::vector<std::string>{"food=Italian"}));
  EXPECT_EQ(e.repeated, 0u);
}

TEST(SlotErrors, PerfectAndRepeatedOutputs) {
  const auto lex = test_lexicon();
  const PluralLexicon plurals{"restaurant"};
  const DialogueAct da = parse_da("inform(name=X-name, food=French, area=citycentre)");
  const SlotErrors ok = slot_errors(tokenize_sentence("X-name serves French food in the city centre.", plurals), da, lex);
  EXPECT_EQ(ok.total(), 0u);
  const SlotErrors rep =
      slot_errors(tokenize_sentence("X-name serves French food, French food in the centre of town.", plurals), da, lex);
  EXPECT_GE(rep.repeated, 1u);
  EXPECT_EQ(rep.repeated_classes, (std::vector<std::string>{"food=French"}));
  EXPECT_EQ(rep.missing, 0u);
  // Stable under detokenize . tokenize.
  const TokenSequence t = tokenize_sentence("X-name is a restaurants near X-near, serving italian food.", plurals);
  const SlotErrors a = slot_errors(t, da, lex);
  const SlotErrors b = slot_errors(tokenize_sentence(detokenize(t), plurals), da, lex);
  EXPECT_EQ(a.missing_classes, b.missing_classes);
  EXPECT_EQ(a.superfluous_classes, b.superfluous_classes);
}

TEST(SlotErrors, TreesUseTreePatterns) {
  const auto lex = test_lexicon();
  const DialogueAct da = parse_da("inform(name=X-name, area=citycentre)");
  DeepSyntaxTree t{{{"be", "v:fin", {{"x-name", "n:subj", {}}, {"centre", "n:in+x", {{"city", "n:attr", {}}}}}}}};
  EXPECT_EQ(slot_errors(t, da, lex).total(), 0u);
}

TEST(SlotErrors, UnknownClassesAreErrors) {
  const auto lex = test_lexicon();
  EXPECT_THROW(slot_errors(toks("x"), parse_da("inform(food=Thai)"), lex), DataError);
  EXPECT_THROW(SlotPatternLexicon::from_json_text(R"({"version": 1, "patterns": {"food=Thai": []}})", {}), DataError);
  EXPECT_NO_THROW(lex.check_covers(std::vector<std::string>{"type=placetoeat", "food=French"}));
  EXPECT_THROW(lex.check_covers(std::vector<std::string>{"food=Thai"}), DataError);
}

TEST(Bootstrap, NinetyPercentWinsIsSignificant) {
  // Per-instance quality: B wins on 90 of 100 instances, A on the rest.
  std::vector<double> qa(100, 0.0);
  std::vector<double> qb(100, 1.0);
  for (std::size_t i = 0; i < 10; ++i) {
    qa[i * 10] = 1.0;
    qb[i * 10] = 0.0;
  }
  auto metric = [](const std::vector<double>& q) {
    return [&q](std::span<const std::size_t> sample) {
      double s = 0;
      for (std::size_t i : sample) s += q[i];
      return s / static_cast<double>(sample.size());
    };
  };
  const BootstrapResult r = paired_bootstrap(metric(qa), metric(qb), 100, 10000, 17);
  EXPECT_LT(r.p_value, 0.01);
  const BootstrapResult same = paired_bootstrap(metric(qa), metric(qa), 100, 10000, 17);
  EXPECT_NEAR(same.p_value, 0.5, 0.05);
  EXPECT_EQ(same.ties, 10000u);
}

TEST(Bootstrap, DeterministicSymmetricAndValidated) {
  Rng rng(21);
  auto a = random_corpus(rng, 40);
  auto b = random_corpus(rng, 40);
  auto rf = random_corpus(rng, 80);
  std::vector<ReferenceSet> refs;
  for (std::size_t i = 0; i < 40; ++i) refs.push_back({rf[2 * i], rf[2 * i + 1]});
  for (auto m : {CorpusMetric::bleu, CorpusMetric::nist}) {
    const auto ab = paired_bootstrap(a, b, refs, m, 1000, 5);
    const auto again = paired_bootstrap(a, b, refs, m, 1000, 5);
    const auto ba = paired_bootstrap(b, a, refs, m, 1000, 5);
    EXPECT_EQ(ab.p_value, again.p_value);
    EXPECT_NEAR(ab.p_value + ba.p_value, 1.0, 1e-12);  // ties are split evenly
  }
  // B better on every instance: p = 0.
  EXPECT_EQ(paired_bootstrap(a, refs_first(refs), refs, CorpusMetric::bleu, 1000, 1).p_value, 0.0);
  EXPECT_THROW(paired_bootstrap(a, b, refs, CorpusMetric::bleu, 999, 1), std::invalid_argument);
  b.pop_back();
  EXPECT_THROW(paired_bootstrap(a, b, refs, CorpusMetric::bleu, 1000, 1), std::invalid_argument);
}
