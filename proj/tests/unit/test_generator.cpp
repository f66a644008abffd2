#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <memory>

#include "seqnlg/autograd.hpp"
#include "seqnlg/generator.hpp"
#include "seqnlg/random.hpp"

using namespace seqnlg;

namespace {

GeneratorParams small_model(std::uint64_t seed, std::size_t vin = 9, std::size_t vout = 11) {
  Rng rng(seed);
  GeneratorDims d{vin, vout, 4, 5};
  return GeneratorParams::random(d, OutputMode::string, rng, 0.5);
}

}  // namespace

TEST(Generator, TapeGradientsMatchFiniteDifferences) {
  GeneratorParams p = small_model(3);
  const IdSequence input{4, 5, 8, 4};
  const IdSequence target{6, 7, 10};
  GeneratorParams g = GeneratorParams::zeros(p.dims, p.mode);
  nn::Tape tape;
  GeneratorVars vars = GeneratorVars::record(tape, p, g);
  nn::Var loss = sequence_loss(tape, vars, p, input, target);
  EXPECT_NEAR(tape.value(loss)[0], sequence_loss_value(p, input, target), 1e-12);
  tape.backward(loss);

  auto pt = p.tensors();
  auto gt = g.tensors();
  const double h = 1e-5;
  for (std::size_t k = 0; k < pt.size(); ++k) {
    for (std::size_t i = 0; i < pt[k]->size(); ++i) {
      double& w = (*pt[k])[i];
      const double saved = w;
      w = saved + h;
      const double up = sequence_loss_value(p, input, target);
      w = saved - h;
      const double down = sequence_loss_value(p, input, target);
      w = saved;
      EXPECT_NEAR((*gt[k])[i], (up - down) / (2 * h), 1e-6) << "tensor " << k << " entry " << i;
    }
  }
}

namespace {

IdSequence random_input(Rng& rng, std::size_t vocab) {
  IdSequence in(1 + rng.index(6));
  for (auto& id : in) id = Vocabulary::kReservedCount + rng.index(vocab - Vocabulary::kReservedCount);
  return in;
}

// Hand-set next-token distributions over {0, 1, STOP=2}, keyed by history
// length and last token. The state holds the history before `prev`.
class ToyScorer : public StepScorer {
 public:
  struct History {
    bool started = false;
    IdSequence tokens;
  };

  State initial_state() const override { return std::make_shared<const History>(); }

  std::pair<Tensor, State> step(const State& state, std::size_t prev) const override {
    auto next = std::make_shared<History>(*std::static_pointer_cast<const History>(state));
    if (next->started) next->tokens.push_back(prev);
    next->started = true;
    static const double table[3][2][3] = {
        {{0.5, 0.3, 0.2}, {0.5, 0.3, 0.2}},
        {{0.1, 0.6, 0.3}, {0.45, 0.45, 0.1}},
        {{0.2, 0.2, 0.6}, {0.7, 0.05, 0.25}},
    };
    const std::size_t len = std::min<std::size_t>(next->tokens.size(), 2);
    const std::size_t last = next->tokens.empty() ? 0 : next->tokens.back();
    Tensor lp(std::vector<std::size_t>{3});
    for (std::size_t k = 0; k < 3; ++k) lp[k] = std::log(table[len][last][k]);
    return {lp, next};
  }
};

struct Enumerated {
  IdSequence tokens;
  bool finished;
  double log_prob;
};

// Every sequence up to max_length: finished ones end in STOP, the rest are
// truncated at max_length.
void enumerate(const StepScorer& scorer, const StepScorer::State& state, IdSequence prefix, double lp,
               std::size_t max_length, std::vector<Enumerated>& out) {
  if (prefix.size() == max_length) {
    out.push_back({prefix, false, lp});
    return;
  }
  const std::size_t prev = prefix.empty() ? Vocabulary::kGo : prefix.back();
  auto [log_probs, next] = scorer.step(state, prev);
  for (std::size_t tok = 0; tok < log_probs.size(); ++tok) {
    if (tok == Vocabulary::kStop) {
      out.push_back({prefix, true, lp + log_probs[tok]});
    } else {
      IdSequence p = prefix;
      p.push_back(tok);
      enumerate(scorer, next, p, lp + log_probs[tok], max_length, out);
    }
  }
}

}  // namespace

TEST(Generator, EncoderAndAttentionBasics) {
  GeneratorParams zero = GeneratorParams::zeros({9, 11, 4, 5}, OutputMode::string);
  const EncoderStates e1 = encode(zero, {5});
  ASSERT_EQ(e1.length(), 1u);
  for (double v : e1.h[0].values()) EXPECT_EQ(v, 0.0);
  EXPECT_THROW(encode(zero, {}), std::exception);
  EXPECT_THROW(encode(zero, {42}), std::out_of_range);

  const GeneratorParams p = small_model(5);
  const EncoderStates one = encode(p, {6});
  const Attention a1 = attend(p, one.h[0], one);
  EXPECT_DOUBLE_EQ(a1.alpha[0], 1.0);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(a1.context[i], one.h[0][i], 1e-15);

  GeneratorParams flat = p;
  flat.attention_score.fill(0.0);
  const EncoderStates en = encode(flat, {4, 5, 6, 7});
  const Attention au = attend(flat, en.h.back(), en);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(au.alpha[i], 0.25, 1e-15);
  for (std::size_t k = 0; k < 5; ++k) {
    double mean = 0;
    for (const auto& h : en.h) mean += h[k] / 4.0;
    EXPECT_NEAR(au.context[k], mean, 1e-15);
  }

  // Context equals the explicit alpha-weighted sum.
  const Attention ar = attend(p, en.h[1], encode(p, {4, 5, 6, 7}));
  const EncoderStates ep = encode(p, {4, 5, 6, 7});
  for (std::size_t k = 0; k < 5; ++k) {
    double c = 0;
    for (std::size_t i = 0; i < 4; ++i) c += ar.alpha[i] * ep.h[i][k];
    EXPECT_NEAR(ar.context[k], c, 1e-14);
  }
}

TEST(Generator, DecodeStepEmitsDeterministicDistributions) {
  Rng rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const GeneratorParams p = GeneratorParams::random({9, 11, 4, 5}, OutputMode::string, rng, 1.0);
    const EncoderStates enc = encode(p, random_input(rng, 9));
    const DecoderState s0 = initial_decoder_state(enc);
    EXPECT_EQ(s0.s, enc.h.back());
    EXPECT_EQ(s0.cell, enc.final_cell);
    EXPECT_EQ(initial_decoder_state(enc, true).cell, Tensor::zeros_like(enc.final_cell));
    const StepOutput a = decode_step(p, Vocabulary::kGo, s0, enc);
    const StepOutput b = decode_step(p, Vocabulary::kGo, s0, enc);
    double sum = 0;
    for (double v : a.distribution.values()) {
      EXPECT_GE(v, 0.0);
      sum += v;
    }
    EXPECT_NEAR(sum, 1.0, 1e-9);
    EXPECT_EQ(a.distribution, b.distribution);
    EXPECT_EQ(a.state.s, b.state.s);
    for (std::size_t k = 0; k < a.log_probs.size(); ++k) EXPECT_NEAR(std::exp(a.log_probs[k]), a.distribution[k], 1e-12);
  }
}

TEST(Generator, GreedyEqualsBeamOfWidthOne) {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const OutputMode mode = trial % 2 ? OutputMode::tree : OutputMode::string;
    const GeneratorParams p = GeneratorParams::random({12, 9, 4, 5}, mode, rng, 1.5);
    const IdSequence in = random_input(rng, 12);
    const GreedyResult g = greedy_decode(p, in, 15);
    const auto beam = beam_search(p, in, 1, 15);
    ASSERT_EQ(beam.size(), 1u);
    EXPECT_EQ(beam[0].tokens, g.tokens);
    EXPECT_NEAR(beam[0].log_prob, g.log_prob, 1e-9);
    EXPECT_EQ(beam[0].finished, !g.truncated);
  }
  const GreedyResult none = greedy_decode(small_model(1), {5}, 0);
  EXPECT_TRUE(none.tokens.empty());
  EXPECT_TRUE(none.truncated);
}

TEST(Generator, BeamListsAreSortedAndScoresRecompute) {
  Rng rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const GeneratorParams p = GeneratorParams::random({12, 9, 4, 5}, OutputMode::string, rng, 1.0);
    const IdSequence in = random_input(rng, 12);
    const auto nbest = beam_search(p, in, 8, 6);
    ASSERT_FALSE(nbest.empty());
    for (std::size_t i = 0; i + 1 < nbest.size(); ++i) EXPECT_GE(nbest[i].log_prob, nbest[i + 1].log_prob);
    for (const auto& h : nbest) {
      const EncoderStates enc = encode(p, in);
      DecoderState st = initial_decoder_state(enc);
      std::size_t prev = Vocabulary::kGo;
      double lp = 0;
      double last = 0;
      IdSequence seq = h.tokens;
      if (h.finished) seq.push_back(Vocabulary::kStop);
      for (std::size_t tok : seq) {
        StepOutput out = decode_step(p, prev, st, enc);
        lp += out.log_probs[tok];
        EXPECT_LE(lp, last + 1e-15);  // extending never increases log_prob
        last = lp;
        st = std::move(out.state);
        prev = tok;
      }
      EXPECT_NEAR(h.log_prob, lp, 1e-9);
    }
  }
  EXPECT_THROW(beam_search(small_model(1), {5}, 0, 5), std::invalid_argument);
}

void expect_matches_enumeration(const StepScorer& scorer, std::size_t max_length) {
  std::vector<Enumerated> all;
  enumerate(scorer, scorer.initial_state(), {}, 0.0, max_length, all);
  std::sort(all.begin(), all.end(), [](const Enumerated& a, const Enumerated& b) {
    return ranks_before(a.tokens, a.finished, a.log_prob, b.tokens, b.finished, b.log_prob);
  });
  const auto nbest = beam_search(scorer, 100, max_length);
  ASSERT_EQ(nbest.size(), all.size());
  for (std::size_t i = 0; i < all.size(); ++i) {
    EXPECT_EQ(nbest[i].tokens, all[i].tokens) << "rank " << i;
    EXPECT_EQ(nbest[i].finished, all[i].finished) << "rank " << i;
    EXPECT_NEAR(nbest[i].log_prob, all[i].log_prob, 1e-12) << "rank " << i;
  }
}

TEST(Generator, BeamMatchesExhaustiveEnumerationOnToyModel) {
  // 1 + 2 + 4 finished sequences and 8 truncated ones.
  ToyScorer toy;
  std::vector<Enumerated> all;
  enumerate(toy, toy.initial_state(), {}, 0.0, 3, all);
  EXPECT_EQ(all.size(), 15u);
  expect_matches_enumeration(toy, 3);
}

TEST(Generator, BeamMatchesExhaustiveEnumerationOnRealModel) {
  // Output vocabulary of the four reserved ids plus one word: 5^3 leaves.
  class ModelScorer : public StepScorer {
   public:
    ModelScorer(const GeneratorParams& p, const IdSequence& in) : p_(p), enc_(encode(p, in)) {}
    State initial_state() const override { return std::make_shared<const DecoderState>(initial_decoder_state(enc_)); }
    std::pair<Tensor, State> step(const State& state, std::size_t prev) const override {
      StepOutput out = decode_step(p_, prev, *std::static_pointer_cast<const DecoderState>(state), enc_);
      return {out.log_probs, std::make_shared<const DecoderState>(std::move(out.state))};
    }

   private:
    const GeneratorParams& p_;
    EncoderStates enc_;
  };
  Rng rng(13);
  for (int trial = 0; trial < 5; ++trial) {
    const GeneratorParams p = GeneratorParams::random({8, 5, 3, 4}, OutputMode::string, rng, 2.0);
    const IdSequence in = random_input(rng, 8);
    ModelScorer scorer(p, in);
    expect_matches_enumeration(scorer, 3);
    // The parameter-level entry point agrees with the generic search.
    const auto direct = beam_search(p, in, 100, 3);
    const auto generic = beam_search(scorer, 100, 3);
    ASSERT_EQ(direct.size(), generic.size());
    for (std::size_t i = 0; i < direct.size(); ++i) EXPECT_EQ(direct[i].tokens, generic[i].tokens);
  }
}

TEST(Generator, TapeAndInferenceLossesAgree) {
  Rng rng(14);
  for (int trial = 0; trial < 10; ++trial) {
    const GeneratorParams p = GeneratorParams::random({12, 9, 4, 5}, OutputMode::string, rng, 1.0);
    const IdSequence in = random_input(rng, 12);
    IdSequence target(1 + rng.index(5));
    for (auto& t : target) t = Vocabulary::kReservedCount + rng.index(5);
    GeneratorParams g = GeneratorParams::zeros(p.dims, p.mode);
    nn::Tape tape;
    const nn::Var loss = sequence_loss(tape, GeneratorVars::record(tape, p, g), p, in, target, trial % 2 == 1);
    EXPECT_NEAR(tape.value(loss)[0], sequence_loss_value(p, in, target, trial % 2 == 1), 1e-10);
  }
}

TEST(Generator, ParamsValidateAndCompare) {
  GeneratorParams p = small_model(2);
  EXPECT_NO_THROW(p.validate());
  EXPECT_EQ(p, small_model(2));
  EXPECT_FALSE(p == small_model(3));
  std::size_t count = 0;
  p.visit([&](const char*, const Tensor& t) { count += t.size(); });
  EXPECT_EQ(count, p.parameter_count());
  p.output_projection = Tensor(std::vector<std::size_t>{3, 3});
  EXPECT_THROW(p.validate(), std::exception);
  EXPECT_EQ(parse_output_mode("tree"), OutputMode::tree);
  EXPECT_THROW(parse_output_mode("graph"), std::invalid_argument);
  EXPECT_GT(default_max_length(OutputMode::tree), default_max_length(OutputMode::string));
}
