#include "seqnlg/generator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "seqnlg/errors.hpp"

namespace seqnlg {

namespace {

void expect_matrix(const Tensor& t, std::size_t rows, std::size_t cols, const char* what) {
  if (t.rank() != 2 || t.rows() != rows || t.cols() != cols) {
    throw ShapeError(std::string(what) + ": expected " + std::to_string(rows) + "x" +
                     std::to_string(cols) + ", got " + t.shape_string());
  }
}

Tensor concat(const Tensor& a, const Tensor& b) {
  std::vector<double> v(a.values().begin(), a.values().end());
  v.insert(v.end(), b.values().begin(), b.values().end());
  return Tensor::vector(std::move(v));
}

Tensor embedding_row(const Tensor& table, std::size_t id, const char* what) {
  if (id >= table.rows()) {
    throw std::out_of_range(std::string(what) + " token id " + std::to_string(id) +
                            " outside vocabulary of size " + std::to_string(table.rows()));
  }
  auto r = table.row(id);
  return Tensor::vector({r.begin(), r.end()});
}

std::size_t argmax(const Tensor& t) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (t[i] > t[best]) best = i;
  }
  return best;
}

class GeneratorScorer final : public StepScorer {
 public:
  GeneratorScorer(const GeneratorParams& params, const EncoderStates& enc, bool zero_cell)
      : params_(params), enc_(enc), zero_cell_(zero_cell) {}

  State initial_state() const override {
    return std::make_shared<const DecoderState>(initial_decoder_state(enc_, zero_cell_));
  }

  std::pair<Tensor, State> step(const State& state, std::size_t prev) const override {
    auto* s = static_cast<const DecoderState*>(state.get());
    StepOutput out = decode_step(params_, prev, *s, enc_);
    return {std::move(out.log_probs), std::make_shared<const DecoderState>(std::move(out.state))};
  }

 private:
  const GeneratorParams& params_;
  const EncoderStates& enc_;
  bool zero_cell_;
};

}  // namespace

std::string_view to_string(OutputMode mode) { return mode == OutputMode::string ? "string" : "tree"; }

OutputMode parse_output_mode(std::string_view text) {
  if (text == "string") return OutputMode::string;
  if (text == "tree") return OutputMode::tree;
  throw std::invalid_argument("unknown output mode '" + std::string(text) + "' (string|tree)");
}

std::size_t default_max_length(OutputMode mode) { return mode == OutputMode::string ? 60 : 120; }

GeneratorParams GeneratorParams::zeros(const GeneratorDims& d, OutputMode mode) {
  if (d.input_vocab == 0 || d.output_vocab == 0 || d.embedding == 0 || d.cell == 0) {
    throw ShapeError("generator dimensions must be positive");
  }
  GeneratorParams p;
  p.mode = mode;
  p.dims = d;
  p.input_embeddings = Tensor({d.input_vocab, d.embedding});
  p.output_embeddings = Tensor({d.output_vocab, d.embedding});
  p.encoder = nn::LstmCellParams::zeros(d.embedding, d.cell);
  p.decoder = nn::LstmCellParams::zeros(d.embedding, d.cell);
  p.attention_state = Tensor({d.cell, d.cell});
  p.attention_encoder = Tensor({d.cell, d.cell});
  p.attention_score = Tensor({d.cell});
  p.decoder_input = Tensor({d.embedding + d.cell, d.embedding});
  p.output_projection = Tensor({2 * d.cell, d.output_vocab});
  return p;
}

GeneratorParams GeneratorParams::random(const GeneratorDims& d, OutputMode mode, Rng& rng,
                                        double scale) {
  GeneratorParams p = zeros(d, mode);
  p.visit([&](const char*, Tensor& t) {
    for (double& v : t.values()) v = rng.uniform(-scale, scale);
  });
  return p;
}

void GeneratorParams::validate() const {
  const auto& d = dims;
  expect_matrix(input_embeddings, d.input_vocab, d.embedding, "input embeddings");
  expect_matrix(output_embeddings, d.output_vocab, d.embedding, "output embeddings");
  encoder.validate();
  decoder.validate();
  if (encoder.input_size != d.embedding || encoder.hidden_size != d.cell ||
      decoder.input_size != d.embedding || decoder.hidden_size != d.cell) {
    throw ShapeError("encoder/decoder LSTM sizes disagree with the generator dimensions");
  }
  expect_matrix(attention_state, d.cell, d.cell, "attention state projection");
  expect_matrix(attention_encoder, d.cell, d.cell, "attention encoder projection");
  if (attention_score.rank() != 1 || attention_score.size() != d.cell) {
    throw ShapeError("attention scoring vector must have length " + std::to_string(d.cell));
  }
  expect_matrix(decoder_input, d.embedding + d.cell, d.embedding, "decoder input projection");
  expect_matrix(output_projection, 2 * d.cell, d.output_vocab, "output projection");
}

std::vector<Tensor*> GeneratorParams::tensors() {
  std::vector<Tensor*> out;
  visit([&](const char*, Tensor& t) { out.push_back(&t); });
  return out;
}

std::size_t GeneratorParams::parameter_count() const {
  std::size_t n = 0;
  visit([&](const char*, const Tensor& t) { n += t.size(); });
  return n;
}

bool operator==(const GeneratorParams& a, const GeneratorParams& b) {
  if (a.mode != b.mode || a.dims.input_vocab != b.dims.input_vocab ||
      a.dims.output_vocab != b.dims.output_vocab || a.dims.embedding != b.dims.embedding ||
      a.dims.cell != b.dims.cell) {
    return false;
  }
  std::vector<const Tensor*> ta, tb;
  a.visit([&](const char*, const Tensor& t) { ta.push_back(&t); });
  b.visit([&](const char*, const Tensor& t) { tb.push_back(&t); });
  for (std::size_t i = 0; i < ta.size(); ++i) {
    if (!(*ta[i] == *tb[i])) return false;
  }
  return true;
}

EncoderStates encode(const GeneratorParams& params, const IdSequence& input) {
  if (input.empty()) throw std::invalid_argument("encode: empty input sequence");
  const std::size_t hs = params.dims.cell;
  EncoderStates enc;
  Tensor h({hs});
  Tensor c({hs});
  std::vector<double> stacked;
  stacked.reserve(input.size() * hs);
  for (std::size_t id : input) {
    const Tensor x = embedding_row(params.input_embeddings, id, "input");
    nn::LstmState next = nn::lstm_step(params.encoder, x, h, c);
    h = std::move(next.h);
    c = std::move(next.c);
    stacked.insert(stacked.end(), h.values().begin(), h.values().end());
    enc.h.push_back(h);
  }
  enc.final_cell = std::move(c);
  enc.stacked = Tensor::matrix(input.size(), hs, std::move(stacked));
  enc.keys = Tensor({input.size(), hs});
  for (std::size_t i = 0; i < input.size(); ++i) {
    nn::vecmat(enc.stacked.row(i), params.attention_encoder, enc.keys.row(i));
  }
  return enc;
}

Attention attend(const GeneratorParams& params, const Tensor& s_prev, const EncoderStates& enc) {
  if (enc.length() == 0) throw std::invalid_argument("attend: no encoder states");
  const std::size_t a = params.dims.cell;
  const Tensor query = nn::vecmat(s_prev, params.attention_state);
  const Tensor& v = params.attention_score;
  Tensor scores({enc.length()});
  for (std::size_t i = 0; i < enc.length(); ++i) {
    const double* kr = enc.keys.data() + i * a;
    double e = 0.0;
    for (std::size_t j = 0; j < a; ++j) e += v[j] * std::tanh(query[j] + kr[j]);
    scores[i] = e;
  }
  Attention out;
  out.alpha = nn::softmax(scores);
  out.context = nn::vecmat(out.alpha, enc.stacked);
  return out;
}

DecoderState initial_decoder_state(const EncoderStates& enc, bool zero_cell) {
  if (enc.length() == 0) throw std::invalid_argument("decoder needs encoder states");
  DecoderState st;
  st.s = enc.h.back();
  st.cell = zero_cell ? Tensor::zeros_like(enc.final_cell) : enc.final_cell;
  return st;
}

StepOutput decode_step(const GeneratorParams& params, std::size_t y_prev, const DecoderState& state,
                       const EncoderStates& enc) {
  Attention att = attend(params, state.s, enc);
  const Tensor emb = embedding_row(params.output_embeddings, y_prev, "output");
  const Tensor x = nn::vecmat(concat(emb, att.context), params.decoder_input);
  nn::LstmState next = nn::lstm_step(params.decoder, x, state.s, state.cell);
  const Tensor logits = nn::vecmat(concat(next.h, att.context), params.output_projection);
  StepOutput out;
  out.log_probs = nn::log_softmax(logits);
  out.distribution = nn::softmax(logits);
  out.state.s = std::move(next.h);
  out.state.cell = std::move(next.c);
  out.state.context = std::move(att.context);
  out.state.alpha = std::move(att.alpha);
  return out;
}

GreedyResult greedy_decode(const GeneratorParams& params, const IdSequence& input,
                           std::size_t max_length, bool zero_cell) {
  GreedyResult result;
  const EncoderStates enc = encode(params, input);
  DecoderState state = initial_decoder_state(enc, zero_cell);
  std::size_t prev = Vocabulary::kGo;
  for (std::size_t step = 0; step < max_length; ++step) {
    StepOutput out = decode_step(params, prev, state, enc);
    const std::size_t tok = argmax(out.log_probs);
    result.log_prob += out.log_probs[tok];
    if (tok == Vocabulary::kStop) return result;
    result.tokens.push_back(tok);
    state = std::move(out.state);
    prev = tok;
  }
  result.truncated = true;
  return result;
}

bool ranks_before(const IdSequence& a_tokens, bool a_finished, double a_log_prob,
                  const IdSequence& b_tokens, bool b_finished, double b_log_prob) {
  if (a_log_prob != b_log_prob) return a_log_prob > b_log_prob;
  IdSequence a = a_tokens;
  IdSequence b = b_tokens;
  if (a_finished) a.push_back(Vocabulary::kStop);
  if (b_finished) b.push_back(Vocabulary::kStop);
  return a < b;
}

std::vector<ScoredSequence> beam_search(const StepScorer& scorer, std::size_t beam_size,
                                        std::size_t max_length) {
  if (beam_size == 0) throw std::invalid_argument("beam_search: beam size must be at least 1");
  std::vector<ScoredSequence> pool;
  pool.push_back({{}, 0.0, false, scorer.initial_state()});

  struct Candidate {
    std::size_t parent;
    std::size_t token;  // appended token; npos for a carried finished hypothesis
    double log_prob;
    bool finished;
  };
  constexpr std::size_t kCarry = static_cast<std::size_t>(-1);

  for (std::size_t step = 0; step < max_length; ++step) {
    if (std::none_of(pool.begin(), pool.end(), [](const ScoredSequence& h) { return !h.finished; })) {
      break;
    }
    std::vector<Candidate> cands;
    std::vector<StepScorer::State> next_states(pool.size());
    for (std::size_t p = 0; p < pool.size(); ++p) {
      const ScoredSequence& h = pool[p];
      if (h.finished) {
        cands.push_back({p, kCarry, h.log_prob, true});
        continue;
      }
      const std::size_t prev = h.tokens.empty() ? Vocabulary::kGo : h.tokens.back();
      auto [log_probs, next] = scorer.step(h.state, prev);
      next_states[p] = std::move(next);
      for (std::size_t tok = 0; tok < log_probs.size(); ++tok) {
        cands.push_back({p, tok, h.log_prob + log_probs[tok], tok == Vocabulary::kStop});
      }
    }
    // Token sequence a candidate stands for, STOP included when finished.
    auto sequence_of = [&](const Candidate& c) {
      IdSequence seq = pool[c.parent].tokens;
      if (c.token == kCarry || c.token == Vocabulary::kStop) {
        seq.push_back(Vocabulary::kStop);
      } else {
        seq.push_back(c.token);
      }
      return seq;
    };
    auto better = [&](const Candidate& a, const Candidate& b) {
      if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
      return sequence_of(a) < sequence_of(b);
    };
    const std::size_t keep = std::min(beam_size, cands.size());
    std::partial_sort(cands.begin(), cands.begin() + keep, cands.end(), better);

    std::vector<ScoredSequence> next_pool;
    next_pool.reserve(keep);
    for (std::size_t k = 0; k < keep; ++k) {
      const Candidate& c = cands[k];
      const ScoredSequence& parent = pool[c.parent];
      if (c.token == kCarry) {
        next_pool.push_back(parent);
        continue;
      }
      ScoredSequence h;
      h.tokens = parent.tokens;
      h.log_prob = c.log_prob;
      h.finished = c.finished;
      if (!c.finished) h.tokens.push_back(c.token);
      h.state = c.finished ? parent.state : next_states[c.parent];
      next_pool.push_back(std::move(h));
    }
    pool = std::move(next_pool);
  }
  std::sort(pool.begin(), pool.end(), [](const ScoredSequence& a, const ScoredSequence& b) {
    return ranks_before(a.tokens, a.finished, a.log_prob, b.tokens, b.finished, b.log_prob);
  });
  return pool;
}

std::vector<Hypothesis> beam_search(const GeneratorParams& params, const IdSequence& input,
                                    std::size_t beam_size, std::size_t max_length, bool zero_cell) {
  const EncoderStates enc = encode(params, input);
  GeneratorScorer scorer(params, enc, zero_cell);
  std::vector<ScoredSequence> found = beam_search(scorer, beam_size, max_length);
  std::vector<Hypothesis> out;
  out.reserve(found.size());
  for (ScoredSequence& s : found) {
    out.push_back({std::move(s.tokens), s.log_prob,
                   std::static_pointer_cast<const DecoderState>(s.state), s.finished});
  }
  return out;
}

GeneratorVars GeneratorVars::record(nn::Tape& tape, const GeneratorParams& p, GeneratorParams& g) {
  GeneratorVars v;
  v.input_embeddings = tape.parameter(p.input_embeddings, g.input_embeddings);
  v.output_embeddings = tape.parameter(p.output_embeddings, g.output_embeddings);
  v.enc_wx = tape.parameter(p.encoder.input_weights, g.encoder.input_weights);
  v.enc_wh = tape.parameter(p.encoder.hidden_weights, g.encoder.hidden_weights);
  v.enc_b = tape.parameter(p.encoder.bias, g.encoder.bias);
  v.dec_wx = tape.parameter(p.decoder.input_weights, g.decoder.input_weights);
  v.dec_wh = tape.parameter(p.decoder.hidden_weights, g.decoder.hidden_weights);
  v.dec_b = tape.parameter(p.decoder.bias, g.decoder.bias);
  v.att_state = tape.parameter(p.attention_state, g.attention_state);
  v.att_encoder = tape.parameter(p.attention_encoder, g.attention_encoder);
  v.att_score = tape.parameter(p.attention_score, g.attention_score);
  v.decoder_input = tape.parameter(p.decoder_input, g.decoder_input);
  v.output_projection = tape.parameter(p.output_projection, g.output_projection);
  return v;
}

namespace {

struct CellVars {
  nn::Var h;
  nn::Var c;
};

CellVars lstm_on_tape(nn::Tape& t, nn::Var x, CellVars prev, nn::Var wx, nn::Var wh, nn::Var b,
                      std::size_t hs) {
  using namespace nn::ops;
  nn::Var z = add(t, add(t, vecmat(t, x, wx), vecmat(t, prev.h, wh)), b);
  nn::Var hc = lstm_gates(t, z, prev.c);
  return {slice(t, hc, 0, hs), slice(t, hc, hs, hs)};
}

}  // namespace

nn::Var sequence_loss(nn::Tape& t, const GeneratorVars& v, const GeneratorParams& params,
                      const IdSequence& input, const IdSequence& target, bool zero_cell) {
  using namespace nn::ops;
  if (input.empty()) throw std::invalid_argument("sequence_loss: empty input sequence");
  const std::size_t hs = params.dims.cell;
  CellVars enc{t.constant(Tensor({hs})), t.constant(Tensor({hs}))};
  std::vector<nn::Var> states;
  states.reserve(input.size());
  for (std::size_t id : input) {
    if (id >= params.dims.input_vocab) throw std::out_of_range("sequence_loss: input id out of range");
    nn::Var x = row(t, v.input_embeddings, id);
    enc = lstm_on_tape(t, x, enc, v.enc_wx, v.enc_wh, v.enc_b, hs);
    states.push_back(enc.h);
  }
  nn::Var stacked = stack_rows(t, states);
  nn::Var keys = matmul(t, stacked, v.att_encoder);

  CellVars dec{enc.h, zero_cell ? t.constant(Tensor({hs})) : enc.c};
  std::vector<nn::Var> losses;
  losses.reserve(target.size() + 1);
  std::size_t prev = Vocabulary::kGo;
  for (std::size_t step = 0; step <= target.size(); ++step) {
    const std::size_t y = step < target.size() ? target[step] : Vocabulary::kStop;
    if (y >= params.dims.output_vocab) throw std::out_of_range("sequence_loss: target id out of range");
    nn::Var query = vecmat(t, dec.h, v.att_state);
    nn::Var alpha = softmax(t, additive_scores(t, query, keys, v.att_score));
    nn::Var context = vecmat(t, alpha, stacked);
    nn::Var emb = row(t, v.output_embeddings, prev);
    nn::Var x = vecmat(t, concat(t, emb, context), v.decoder_input);
    dec = lstm_on_tape(t, x, dec, v.dec_wx, v.dec_wh, v.dec_b, hs);
    nn::Var logits = vecmat(t, concat(t, dec.h, context), v.output_projection);
    losses.push_back(softmax_cross_entropy(t, logits, y));
    prev = y;
  }
  return add_scalars(t, losses);
}

double sequence_loss_value(const GeneratorParams& params, const IdSequence& input,
                           const IdSequence& target, bool zero_cell) {
  const EncoderStates enc = encode(params, input);
  DecoderState state = initial_decoder_state(enc, zero_cell);
  double loss = 0.0;
  std::size_t prev = Vocabulary::kGo;
  for (std::size_t step = 0; step <= target.size(); ++step) {
    const std::size_t y = step < target.size() ? target[step] : Vocabulary::kStop;
    StepOutput out = decode_step(params, prev, state, enc);
    loss += std::min(-out.log_probs[y], -std::log(nn::kMinProbability));
    state = std::move(out.state);
    prev = y;
  }
  return loss;
}

}  // namespace seqnlg
