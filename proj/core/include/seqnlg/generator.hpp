#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "seqnlg/autograd.hpp"
#include "seqnlg/dialogue_act.hpp"
#include "seqnlg/kernels.hpp"
#include "seqnlg/random.hpp"
#include "seqnlg/tensor.hpp"
#include "seqnlg/vocabulary.hpp"

namespace seqnlg {

enum class OutputMode { string, tree };

std::string_view to_string(OutputMode mode);
/// Accepts "string" or "tree"; throws std::invalid_argument otherwise.
OutputMode parse_output_mode(std::string_view text);

/// Default decoding length limit per output mode.
std::size_t default_max_length(OutputMode mode);

struct GeneratorDims {
  std::size_t input_vocab = 0;
  std::size_t output_vocab = 0;
  std::size_t embedding = 50;
  std::size_t cell = 128;
};

/// Learned arrays of the attention encoder-decoder.
///
/// The decoder input at step t is (embed(y_{t-1}) ++ c_t) * decoder_input,
/// the output distribution is softmax((s_t ++ c_t) * output_projection),
/// and attention scores are score . tanh(s_{t-1} * attention_state +
/// h_i * attention_encoder).
struct GeneratorParams {
  OutputMode mode = OutputMode::string;
  GeneratorDims dims;
  Tensor input_embeddings;    // [input_vocab x embedding]
  Tensor output_embeddings;   // [output_vocab x embedding]
  nn::LstmCellParams encoder;  // embedding -> cell
  nn::LstmCellParams decoder;  // embedding -> cell
  Tensor attention_state;     // [cell x cell]
  Tensor attention_encoder;   // [cell x cell]
  Tensor attention_score;     // [cell]
  Tensor decoder_input;       // W_S: [(embedding + cell) x embedding]
  Tensor output_projection;   // W_Y: [2 cell x output_vocab]

  static GeneratorParams zeros(const GeneratorDims& dims, OutputMode mode);
  /// Every entry uniform in [-scale, scale].
  static GeneratorParams random(const GeneratorDims& dims, OutputMode mode, Rng& rng,
                                double scale = 0.1);

  void validate() const;

  /// Calls f(name, tensor) for every learned tensor in a fixed order.
  template <class F>
  void visit(F&& f) {
    visit_impl(*this, f);
  }
  template <class F>
  void visit(F&& f) const {
    visit_impl(*this, f);
  }

  std::vector<Tensor*> tensors();
  std::size_t parameter_count() const;

  friend bool operator==(const GeneratorParams& a, const GeneratorParams& b);

 private:
  template <class Self, class F>
  static void visit_impl(Self& self, F& f) {
    f("input_embeddings", self.input_embeddings);
    f("output_embeddings", self.output_embeddings);
    f("encoder.input_weights", self.encoder.input_weights);
    f("encoder.hidden_weights", self.encoder.hidden_weights);
    f("encoder.bias", self.encoder.bias);
    f("decoder.input_weights", self.decoder.input_weights);
    f("decoder.hidden_weights", self.decoder.hidden_weights);
    f("decoder.bias", self.decoder.bias);
    f("attention.state", self.attention_state);
    f("attention.encoder", self.attention_encoder);
    f("attention.score", self.attention_score);
    f("decoder_input", self.decoder_input);
    f("output_projection", self.output_projection);
  }
};

/// h_1..h_n with their stacked and attention-projected forms.
struct EncoderStates {
  std::vector<Tensor> h;
  Tensor final_cell;
  Tensor stacked;  // [n x cell]
  Tensor keys;     // stacked * attention_encoder, [n x cell]

  std::size_t length() const noexcept { return h.size(); }
};

struct DecoderState {
  Tensor s;
  Tensor cell;
  Tensor context;  // c_t of the last step; empty before the first step
  Tensor alpha;    // attention weights of the last step
};

struct Attention {
  Tensor alpha;
  Tensor context;
};

struct StepOutput {
  Tensor distribution;
  Tensor log_probs;
  DecoderState state;
};

/// Runs the encoder LSTM from a zero state. Throws on empty or unknown input.
EncoderStates encode(const GeneratorParams& params, const IdSequence& input);

Attention attend(const GeneratorParams& params, const Tensor& s_prev, const EncoderStates& enc);

/// s_0 = h_n; the memory cell is carried over unless `zero_cell` is set.
DecoderState initial_decoder_state(const EncoderStates& enc, bool zero_cell = false);

/// One decoder step. y_prev is Vocabulary::kGo on the first step.
StepOutput decode_step(const GeneratorParams& params, std::size_t y_prev, const DecoderState& state,
                       const EncoderStates& enc);

struct GreedyResult {
  IdSequence tokens;  // without GO/STOP
  double log_prob = 0.0;
  bool truncated = false;
};

GreedyResult greedy_decode(const GeneratorParams& params, const IdSequence& input,
                           std::size_t max_length, bool zero_cell = false);

/// Candidate output of beam search.
struct Hypothesis {
  IdSequence tokens;  // emitted ids, STOP excluded
  double log_prob = 0.0;
  std::shared_ptr<const DecoderState> state;
  bool finished = false;
};

/// n-best list sorted by log_prob descending; equal scores are ordered by
/// their token sequences (STOP appended for finished ones), lexicographically.
std::vector<Hypothesis> beam_search(const GeneratorParams& params, const IdSequence& input,
                                    std::size_t beam_size, std::size_t max_length,
                                    bool zero_cell = false);

/// Per-step log-probability source for the generic search below.
class StepScorer {
 public:
  using State = std::shared_ptr<const void>;
  virtual ~StepScorer() = default;
  virtual State initial_state() const = 0;
  /// Log-probabilities over the vocabulary after `prev`, and the next state.
  virtual std::pair<Tensor, State> step(const State& state, std::size_t prev) const = 0;
};

struct ScoredSequence {
  IdSequence tokens;
  double log_prob = 0.0;
  bool finished = false;
  StepScorer::State state;
};

std::vector<ScoredSequence> beam_search(const StepScorer& scorer, std::size_t beam_size,
                                        std::size_t max_length);

/// Orders two scored sequences as the n-best list does (true if a ranks first).
bool ranks_before(const IdSequence& a_tokens, bool a_finished, double a_log_prob,
                  const IdSequence& b_tokens, bool b_finished, double b_log_prob);

/// Leaves for the generator tensors on a tape, paired with gradient sinks.
struct GeneratorVars {
  nn::Var input_embeddings, output_embeddings;
  nn::Var enc_wx, enc_wh, enc_b;
  nn::Var dec_wx, dec_wh, dec_b;
  nn::Var att_state, att_encoder, att_score;
  nn::Var decoder_input, output_projection;

  static GeneratorVars record(nn::Tape& tape, const GeneratorParams& params, GeneratorParams& grads);
};

/// Teacher-forced sequence cross-entropy of target (+STOP) given input.
nn::Var sequence_loss(nn::Tape& tape, const GeneratorVars& vars, const GeneratorParams& params,
                      const IdSequence& input, const IdSequence& target, bool zero_cell = false);

/// Same loss from the inference path (no tape).
double sequence_loss_value(const GeneratorParams& params, const IdSequence& input,
                           const IdSequence& target, bool zero_cell = false);

}  // namespace seqnlg
