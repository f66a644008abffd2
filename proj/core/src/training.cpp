#include "seqnlg/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include <spdlog/spdlog.h>

#include "seqnlg/autograd.hpp"
#include "seqnlg/errors.hpp"
#include "seqnlg/random.hpp"

namespace seqnlg {

void TrainConfig::validate() const {
  auto require = [](bool ok, const char* field) {
    if (!ok) throw std::invalid_argument(std::string("train config: ") + field + " must be positive");
  };
  require(learning_rate > 0.0 && std::isfinite(learning_rate), "learning_rate");
  require(embedding_size > 0, "embedding_size");
  require(cell_size > 0, "cell_size");
  require(batch_size > 0, "batch_size");
  require(max_passes > 0, "max_passes");
  require(patience_passes > 0, "patience_passes");
  require(top_k_tracked > 0, "top_k_tracked");
  require(restarts > 0, "restarts");
  require(init_scale > 0.0, "init_scale");
}

bool TopKTracker::offer(double value) {
  if (values_.size() == k_ && value <= values_.back()) return false;
  auto pos = std::upper_bound(values_.begin(), values_.end(), value, std::greater<>());
  values_.insert(pos, value);
  if (values_.size() > k_) values_.pop_back();
  return true;
}

double mean_loss(const GeneratorParams& params, std::span<const TrainingPair> pairs, bool zero_cell) {
  if (pairs.empty()) return 0.0;
  double total = 0.0;
  for (const auto& p : pairs) total += sequence_loss_value(params, p.input, p.target, zero_cell);
  return total / static_cast<double>(pairs.size());
}

double validation_bleu(const GeneratorParams& params, std::span<const ValidationItem> items,
                       const Vocabulary& output_vocab, std::size_t max_length, bool zero_cell) {
  if (items.empty()) return 0.0;
  std::vector<TokenSequence> hyps;
  std::vector<eval::ReferenceSet> refs;
  hyps.reserve(items.size());
  refs.reserve(items.size());
  for (const auto& item : items) {
    hyps.push_back(output_vocab.to_tokens(greedy_decode(params, item.input, max_length, zero_cell).tokens));
    refs.push_back(item.refs);
  }
  return eval::bleu(hyps, refs);
}

double train_batch(GeneratorParams& params, nn::AdamState& adam, GeneratorParams& grads,
                   std::span<const TrainingPair* const> batch, bool zero_cell) {
  for (Tensor* g : grads.tensors()) g->fill(0.0);
  double total = 0.0;
  for (const TrainingPair* pair : batch) {
    nn::Tape tape;
    GeneratorVars vars = GeneratorVars::record(tape, params, grads);
    nn::Var loss = sequence_loss(tape, vars, params, pair->input, pair->target, zero_cell);
    const double value = tape.value(loss)[0];
    if (!std::isfinite(value)) return std::nan("");
    total += value;
    tape.backward(loss);
  }
  // Loss is summed over time steps and averaged over the batch.
  const double scale = 1.0 / static_cast<double>(batch.size());
  std::vector<Tensor*> ps = params.tensors();
  std::vector<Tensor*> gs = grads.tensors();
  for (Tensor* g : gs) {
    for (double& v : g->values()) v *= scale;
  }
  std::vector<const Tensor*> cgs(gs.begin(), gs.end());
  if (!adam.update(ps, cgs)) return std::nan("");
  return total;
}

namespace {

struct RestartOutcome {
  RestartReport report;
  GeneratorParams best;
};

RestartOutcome run_restart(std::size_t restart, std::span<const TrainingPair> train,
                           std::span<const ValidationItem> validation, const GeneratorDims& dims,
                           const Vocabulary& output_vocab, OutputMode mode, const TrainConfig& cfg,
                           const PassCallback& on_pass) {
  RestartOutcome out;
  out.report.restart = restart;
  out.report.seed = mix_seed(cfg.seed, restart);
  Rng rng(out.report.seed);
  GeneratorParams params = GeneratorParams::random(dims, mode, rng, cfg.init_scale);
  GeneratorParams grads = GeneratorParams::zeros(dims, mode);
  nn::AdamState adam(params.tensors(), nn::AdamConfig{.learning_rate = cfg.learning_rate});
  out.best = params;

  std::vector<const TrainingPair*> order;
  order.reserve(train.size());
  for (const auto& p : train) order.push_back(&p);

  TopKTracker tracker(cfg.top_k_tracked);
  std::size_t last_change = 0;
  const std::size_t max_length = cfg.decode_length(mode);

  for (std::size_t pass = 1; pass <= cfg.max_passes; ++pass) {
    rng.shuffle(order);
    double pass_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t len = std::min(cfg.batch_size, order.size() - start);
      const double loss = train_batch(params, adam, grads, std::span(order).subspan(start, len),
                                      cfg.zero_init_cell);
      if (std::isnan(loss)) {
        spdlog::warn("restart {} diverged at pass {}; discarding it", restart, pass);
        out.report.diverged = true;
        return out;
      }
      pass_loss += loss;
    }
    PassRecord rec;
    rec.pass = pass;
    rec.loss = pass_loss / static_cast<double>(order.size());
    rec.bleu = validation.empty() ? 0.0
                                  : validation_bleu(params, validation, output_vocab, max_length,
                                                    cfg.zero_init_cell);
    out.report.history.push_back(rec);
    if (rec.bleu > out.report.best_bleu) {
      out.report.best_bleu = rec.bleu;
      out.report.best_pass = pass;
      out.best = params;
    }
    if (tracker.offer(rec.bleu)) last_change = pass;
    if (on_pass) on_pass(out.report, rec);
    if (rec.bleu >= cfg.target_bleu || pass - last_change >= cfg.patience_passes) {
      out.report.early_stopped = pass < cfg.max_passes;
      break;
    }
  }
  return out;
}

}  // namespace

TrainResult train_generator(std::span<const TrainingPair> train, std::span<const ValidationItem> validation,
                            const Vocabulary& input_vocab, const Vocabulary& output_vocab,
                            OutputMode mode, const TrainConfig& config, const PassCallback& on_pass) {
  config.validate();
  if (train.empty()) throw TrainingError("training corpus is empty");
  const GeneratorDims dims{input_vocab.size(), output_vocab.size(), config.embedding_size,
                           config.cell_size};
  TrainResult result;
  bool have_best = false;
  for (std::size_t r = 0; r < config.restarts; ++r) {
    RestartOutcome outcome = run_restart(r, train, validation, dims, output_vocab, mode, config, on_pass);
    if (!outcome.report.diverged && (!have_best || outcome.report.best_bleu > result.report.best_bleu)) {
      have_best = true;
      result.params = std::move(outcome.best);
      result.report.best_restart = r;
      result.report.best_bleu = outcome.report.best_bleu;
    }
    result.report.restarts.push_back(std::move(outcome.report));
  }
  if (!have_best) throw TrainingError("all " + std::to_string(config.restarts) + " restarts diverged");
  return result;
}

}  // namespace seqnlg
