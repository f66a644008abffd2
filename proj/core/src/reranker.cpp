#include "seqnlg/reranker.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

#include <spdlog/spdlog.h>

#include "seqnlg/adam.hpp"
#include "seqnlg/autograd.hpp"
#include "seqnlg/errors.hpp"
#include "seqnlg/model_io.hpp"
#include "seqnlg/syntax_tree.hpp"

namespace seqnlg {

using nlohmann::json;

ClassInventory::ClassInventory(std::vector<std::string> classes) : classes_(std::move(classes)) {
  for (std::size_t i = 0; i < classes_.size(); ++i) {
    if (classes_[i].empty()) throw std::invalid_argument("class inventory: empty class name");
    if (!index_.emplace(classes_[i], i).second) {
      throw std::invalid_argument("class inventory: duplicate class '" + classes_[i] + "'");
    }
  }
}

ClassInventory ClassInventory::build(std::span<const DialogueAct> das) {
  std::set<std::string> acts;
  std::set<std::string> pairs;
  for (const auto& da : das) {
    for (const auto& item : da.items()) {
      acts.insert(item.act_type);
      if (!item.slot.empty()) pairs.insert(slot_value_class(item));
    }
  }
  std::vector<std::string> classes(acts.begin(), acts.end());
  classes.insert(classes.end(), pairs.begin(), pairs.end());
  return ClassInventory(std::move(classes));
}

std::optional<std::size_t> ClassInventory::find(const std::string& cls) const {
  auto it = index_.find(cls);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

ContentEncoding da_to_content_vector(const DialogueAct& da, const ClassInventory& inv) {
  ContentEncoding enc;
  enc.bits.assign(inv.size(), 0);
  std::set<std::string> present;
  for (const auto& item : da.items()) {
    present.insert(item.act_type);
    if (!item.slot.empty()) present.insert(slot_value_class(item));
  }
  for (const auto& cls : present) {
    if (auto i = inv.find(cls)) {
      enc.bits[*i] = 1;
    } else {
      ++enc.out_of_inventory;
    }
  }
  return enc;
}

std::size_t hamming_penalty(const ContentVector& a, const ContentVector& b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("hamming_penalty: lengths " + std::to_string(a.size()) + " and " +
                                std::to_string(b.size()) + " differ");
  }
  std::size_t d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] != b[i]);
  return d;
}

RerankerParams RerankerParams::zeros(const RerankerDims& d) {
  if (d.vocab == 0 || d.classes == 0 || d.embedding == 0 || d.cell == 0) {
    throw ShapeError("reranker dimensions must be positive");
  }
  RerankerParams p;
  p.dims = d;
  p.embeddings = Tensor({d.vocab, d.embedding});
  p.encoder = nn::LstmCellParams::zeros(d.embedding, d.cell);
  p.projection = Tensor({d.cell, d.classes});
  p.bias = Tensor({d.classes});
  return p;
}

RerankerParams RerankerParams::random(const RerankerDims& d, Rng& rng, double scale) {
  RerankerParams p = zeros(d);
  p.visit([&](const char*, Tensor& t) {
    for (double& v : t.values()) v = rng.uniform(-scale, scale);
  });
  return p;
}

void RerankerParams::validate() const {
  auto check = [](const Tensor& t, std::vector<std::size_t> shape, const char* what) {
    if (t.shape() != shape) {
      throw ShapeError(std::string("reranker ") + what + ": expected " + shape_string(shape) + ", got " +
                       t.shape_string());
    }
  };
  check(embeddings, {dims.vocab, dims.embedding}, "embeddings");
  encoder.validate();
  if (encoder.input_size != dims.embedding || encoder.hidden_size != dims.cell) {
    throw ShapeError("reranker encoder sizes disagree with its dimensions");
  }
  check(projection, {dims.cell, dims.classes}, "projection");
  check(bias, {dims.classes}, "bias");
}

std::vector<Tensor*> RerankerParams::tensors() {
  std::vector<Tensor*> out;
  visit([&](const char*, Tensor& t) { out.push_back(&t); });
  return out;
}

bool operator==(const RerankerParams& a, const RerankerParams& b) {
  return a.dims.vocab == b.dims.vocab && a.dims.classes == b.dims.classes &&
         a.dims.embedding == b.dims.embedding && a.dims.cell == b.dims.cell && a.embeddings == b.embeddings &&
         a.encoder.input_weights == b.encoder.input_weights &&
         a.encoder.hidden_weights == b.encoder.hidden_weights && a.encoder.bias == b.encoder.bias &&
         a.projection == b.projection && a.bias == b.bias;
}

void RerankConfig::validate() const {
  if (!(penalty_weight >= 0.0)) throw std::invalid_argument("rerank penalty_weight must be non-negative");
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw std::invalid_argument("rerank threshold must be in [0, 1]");
}

Classification classify(const RerankerParams& params, const IdSequence& candidate, double threshold) {
  const std::size_t hs = params.dims.cell;
  Tensor h({hs});
  Tensor c({hs});
  for (std::size_t id : candidate) {
    if (id >= params.dims.vocab) throw std::out_of_range("classify: token id outside the reranker vocabulary");
    auto r = params.embeddings.row(id);
    nn::LstmState next = nn::lstm_step(params.encoder, Tensor::vector({r.begin(), r.end()}), h, c);
    h = std::move(next.h);
    c = std::move(next.c);
  }
  Tensor logits = nn::vecmat(h, params.projection);
  for (std::size_t i = 0; i < logits.size(); ++i) logits[i] += params.bias[i];
  Classification out;
  out.empty_input = candidate.empty();
  out.probabilities = nn::sigmoid(logits);
  out.bits.resize(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out.bits[i] = out.probabilities[i] >= threshold ? 1 : 0;
  return out;
}

std::vector<RerankEntry> rerank_scores(std::span<const double> log_probs, std::span<const double> penalties,
                                       double weight) {
  if (log_probs.size() != penalties.size()) throw std::invalid_argument("rerank: misaligned penalties");
  std::vector<RerankEntry> entries(log_probs.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    entries[i] = {i, log_probs[i], penalties[i], log_probs[i] - weight * penalties[i]};
  }
  std::stable_sort(entries.begin(), entries.end(),
                   [](const RerankEntry& a, const RerankEntry& b) { return a.score > b.score; });
  return entries;
}

void RerankerTrainConfig::validate() const {
  if (!(learning_rate > 0.0) || embedding_size == 0 || cell_size == 0 || batch_size == 0 || max_passes == 0 ||
      !(init_scale > 0.0) || !(validation_weight >= 0.0) || !(threshold >= 0.0 && threshold <= 1.0)) {
    throw std::invalid_argument("reranker train config has a non-positive or out-of-range field");
  }
}

std::size_t total_distance(const RerankerParams& params, std::span<const RerankerExample> examples,
                           double threshold) {
  std::size_t d = 0;
  for (const auto& ex : examples) d += hamming_penalty(classify(params, ex.input, threshold).bits, ex.target);
  return d;
}

namespace {

struct RerankerVars {
  nn::Var embeddings, wx, wh, b, projection, bias;
};

double reranker_batch(RerankerParams& params, RerankerParams& grads, nn::AdamState& adam,
                      std::span<const RerankerExample* const> batch) {
  for (Tensor* g : grads.tensors()) g->fill(0.0);
  const std::size_t hs = params.dims.cell;
  double total = 0.0;
  for (const RerankerExample* ex : batch) {
    nn::Tape t;
    RerankerVars v{t.parameter(params.embeddings, grads.embeddings),
                   t.parameter(params.encoder.input_weights, grads.encoder.input_weights),
                   t.parameter(params.encoder.hidden_weights, grads.encoder.hidden_weights),
                   t.parameter(params.encoder.bias, grads.encoder.bias),
                   t.parameter(params.projection, grads.projection),
                   t.parameter(params.bias, grads.bias)};
    nn::Var h = t.constant(Tensor({hs}));
    nn::Var c = t.constant(Tensor({hs}));
    for (std::size_t id : ex->input) {
      using namespace nn::ops;
      nn::Var x = row(t, v.embeddings, id);
      nn::Var z = add(t, add(t, vecmat(t, x, v.wx), vecmat(t, h, v.wh)), v.b);
      nn::Var hc = lstm_gates(t, z, c);
      h = slice(t, hc, 0, hs);
      c = slice(t, hc, hs, hs);
    }
    nn::Var logits = nn::ops::add(t, nn::ops::vecmat(t, h, v.projection), v.bias);
    Tensor target({ex->target.size()});
    for (std::size_t i = 0; i < ex->target.size(); ++i) target[i] = ex->target[i];
    nn::Var loss = nn::ops::sigmoid_binary_cross_entropy(t, logits, target);
    const double value = t.value(loss)[0];
    if (!std::isfinite(value)) return std::nan("");
    total += value;
    t.backward(loss);
  }
  const double scale = 1.0 / static_cast<double>(batch.size());
  std::vector<Tensor*> ps = params.tensors();
  std::vector<Tensor*> gs = grads.tensors();
  for (Tensor* g : gs) {
    for (double& x : g->values()) x *= scale;
  }
  std::vector<const Tensor*> cgs(gs.begin(), gs.end());
  if (!adam.update(ps, cgs)) return std::nan("");
  return total;
}

}  // namespace

RerankerTrainResult train_reranker(std::span<const RerankerExample> train,
                                   std::span<const RerankerExample> validation, const RerankerDims& dims_in,
                                   const RerankerTrainConfig& cfg, const RerankerPassCallback& on_pass) {
  cfg.validate();
  if (train.empty()) throw TrainingError("reranker training corpus is empty");
  RerankerDims dims = dims_in;
  dims.embedding = cfg.embedding_size;
  dims.cell = cfg.cell_size;
  for (const auto& ex : train) {
    if (ex.target.size() != dims.classes) throw TrainingError("reranker target length disagrees with the inventory");
  }
  Rng rng(cfg.seed);
  RerankerParams params = RerankerParams::random(dims, rng, cfg.init_scale);
  RerankerParams grads = RerankerParams::zeros(dims);
  nn::AdamState adam(params.tensors(), nn::AdamConfig{.learning_rate = cfg.learning_rate});

  std::vector<const RerankerExample*> order;
  for (const auto& ex : train) order.push_back(&ex);

  RerankerTrainResult result;
  result.params = params;
  bool have_best = false;
  for (std::size_t pass = 1; pass <= cfg.max_passes; ++pass) {
    rng.shuffle(order);
    double loss = 0.0;
    bool diverged = false;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t len = std::min(cfg.batch_size, order.size() - start);
      const double l = reranker_batch(params, grads, adam, std::span(order).subspan(start, len));
      if (std::isnan(l)) {
        diverged = true;
        break;
      }
      loss += l;
    }
    if (diverged) {
      spdlog::warn("reranker training diverged at pass {}; keeping the best earlier pass", pass);
      result.report.diverged = true;
      if (!have_best) throw TrainingError("reranker training diverged in its first pass");
      break;
    }
    RerankerPass rec;
    rec.pass = pass;
    rec.loss = loss / static_cast<double>(order.size());
    rec.train_distance = total_distance(params, train, cfg.threshold);
    rec.validation_distance = total_distance(params, validation, cfg.threshold);
    rec.selection_score = cfg.validation_weight * static_cast<double>(rec.validation_distance) +
                          static_cast<double>(rec.train_distance);
    result.report.history.push_back(rec);
    if (!have_best || rec.selection_score < result.report.best_score) {
      have_best = true;
      result.report.best_score = rec.selection_score;
      result.report.best_pass = pass;
      result.params = params;
    }
    if (on_pass) on_pass(rec);
    // Nothing can beat a perfect fit.
    if (rec.selection_score == 0.0) break;
  }
  return result;
}

TokenSequence reranker_view(const TokenSequence& decoder_output, OutputMode mode) {
  if (mode == OutputMode::string) return decoder_output;
  if (decoder_output.empty()) return {};
  try {
    return tree_to_flat(bracketed_to_tree(decoder_output).tree);
  } catch (const ParseError&) {
    return {};
  }
}

Classification RerankerModel::classify(const TokenSequence& view_tokens, double threshold) const {
  return seqnlg::classify(params, vocab.to_ids(view_tokens), threshold);
}

double RerankerModel::penalty(const TokenSequence& decoder_output, const DialogueAct& da,
                              const RerankConfig& cfg) const {
  const ContentVector gold = da_to_content_vector(da, inventory).bits;
  const Classification cls = classify(reranker_view(decoder_output, mode), cfg.threshold);
  if (!cfg.expected_distance) return static_cast<double>(hamming_penalty(cls.bits, gold));
  double d = 0.0;
  for (std::size_t i = 0; i < gold.size(); ++i) d += std::abs(cls.probabilities[i] - gold[i]);
  return d;
}

std::vector<RerankEntry> RerankerModel::rerank(std::span<const TokenSequence> decoder_outputs,
                                               std::span<const double> log_probs, const DialogueAct& da,
                                               const RerankConfig& cfg) const {
  cfg.validate();
  if (decoder_outputs.size() != log_probs.size()) throw std::invalid_argument("rerank: misaligned n-best list");
  std::vector<double> penalties;
  penalties.reserve(decoder_outputs.size());
  for (const auto& out : decoder_outputs) penalties.push_back(penalty(out, da, cfg));
  return rerank_scores(log_probs, penalties, cfg.penalty_weight);
}

namespace {

constexpr std::string_view kKind = "seqnlg-reranker";

json to_json(const RerankerTrainConfig& c) {
  return json{{"learning_rate", c.learning_rate}, {"embedding_size", c.embedding_size},
              {"cell_size", c.cell_size},         {"batch_size", c.batch_size},
              {"max_passes", c.max_passes},       {"seed", c.seed},
              {"init_scale", c.init_scale},       {"threshold", c.threshold},
              {"validation_weight", c.validation_weight}};
}

RerankerTrainConfig reranker_config_from_json(const json& j) {
  RerankerTrainConfig c;
  j.at("learning_rate").get_to(c.learning_rate);
  j.at("embedding_size").get_to(c.embedding_size);
  j.at("cell_size").get_to(c.cell_size);
  j.at("batch_size").get_to(c.batch_size);
  j.at("max_passes").get_to(c.max_passes);
  j.at("seed").get_to(c.seed);
  j.at("init_scale").get_to(c.init_scale);
  j.at("threshold").get_to(c.threshold);
  j.at("validation_weight").get_to(c.validation_weight);
  return c;
}

}  // namespace

void save_reranker(const std::filesystem::path& path, const RerankerModel& m) {
  json j = io::make_header(kKind);
  j["mode"] = std::string(to_string(m.mode));
  j["config"] = to_json(m.config);
  j["vocab"] = io::vocabulary_to_json(m.vocab);
  j["inventory"] = m.inventory.classes();
  j["training_ids"] = m.training_ids;
  json history = json::array();
  for (const auto& p : m.report.history) {
    history.push_back({p.pass, p.loss, p.train_distance, p.validation_distance, p.selection_score});
  }
  j["report"] = {{"best_pass", m.report.best_pass},
                 {"best_score", m.report.best_score},
                 {"diverged", m.report.diverged},
                 {"history", std::move(history)}};
  json tensors = json::object();
  m.params.visit([&](const char* name, const Tensor& t) { tensors[name] = io::tensor_to_json(t); });
  j["dims"] = {{"vocab", m.params.dims.vocab},
               {"classes", m.params.dims.classes},
               {"embedding", m.params.dims.embedding},
               {"cell", m.params.dims.cell}};
  j["tensors"] = std::move(tensors);
  io::write_json_file(path, j);
}

RerankerModel load_reranker(const std::filesystem::path& path) {
  const json j = io::read_json_file(path);
  io::check_header(j, kKind);
  RerankerModel m;
  try {
    m.mode = parse_output_mode(j.at("mode").get<std::string>());
    m.config = reranker_config_from_json(j.at("config"));
    m.vocab = io::vocabulary_from_json(j.at("vocab"));
    m.inventory = ClassInventory(j.at("inventory").get<std::vector<std::string>>());
    m.training_ids = j.at("training_ids").get<std::vector<std::size_t>>();
    const json& r = j.at("report");
    m.report.best_pass = r.at("best_pass").get<std::size_t>();
    m.report.best_score = r.at("best_score").get<double>();
    m.report.diverged = r.at("diverged").get<bool>();
    for (const auto& h : r.at("history")) {
      m.report.history.push_back({h.at(0).get<std::size_t>(), h.at(1).get<double>(), h.at(2).get<std::size_t>(),
                                  h.at(3).get<std::size_t>(), h.at(4).get<double>()});
    }
    const json& d = j.at("dims");
    RerankerDims dims{d.at("vocab").get<std::size_t>(), d.at("classes").get<std::size_t>(),
                      d.at("embedding").get<std::size_t>(), d.at("cell").get<std::size_t>()};
    m.params = RerankerParams::zeros(dims);
    const json& tensors = j.at("tensors");
    m.params.visit([&](const char* name, Tensor& t) {
      if (!tensors.contains(name)) throw DataError(path.string() + ": reranker lacks tensor '" + name + "'");
      t = io::tensor_from_json(tensors.at(name), name, t.shape());
    });
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  if (m.params.dims.vocab != m.vocab.size() || m.params.dims.classes != m.inventory.size()) {
    throw DataError(path.string() + ": reranker shapes disagree with its vocabulary or inventory");
  }
  return m;
}

}  // namespace seqnlg
