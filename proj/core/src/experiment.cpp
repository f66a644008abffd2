#include "seqnlg/experiment.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

#include "seqnlg/bootstrap.hpp"
#include "seqnlg/errors.hpp"
#include "seqnlg/metrics.hpp"
#include "seqnlg/model_io.hpp"
#include "seqnlg/random.hpp"
#include "seqnlg/synthesis.hpp"
#include "seqnlg/syntax_tree.hpp"
#include "seqnlg/text.hpp"

namespace seqnlg {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Substream ids for seeds derived from the experiment seed.
constexpr std::uint64_t kCorpusStream = 1;
constexpr std::uint64_t kFoldStream = 2;
constexpr std::uint64_t kBootstrapStream = 3;
constexpr std::uint64_t kGeneratorStream = 1000;
constexpr std::uint64_t kRerankerStream = 2000;

fs::path resolve(const fs::path& p, const fs::path& base) {
  if (p.empty() || p.is_absolute()) return p;
  return base / p;
}

json reranker_train_to_json(const RerankerTrainConfig& c) {
  return json{{"learning_rate", c.learning_rate}, {"embedding_size", c.embedding_size},
              {"cell_size", c.cell_size},         {"batch_size", c.batch_size},
              {"max_passes", c.max_passes},       {"init_scale", c.init_scale},
              {"threshold", c.threshold},         {"validation_weight", c.validation_weight}};
}

template <class T>
void read_field(const json& j, const char* key, T& field) {
  if (j.contains(key)) j.at(key).get_to(field);
}

void reject_unknown(const json& j, std::initializer_list<const char*> known, const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    if (std::none_of(known.begin(), known.end(), [&](const char* k) { return key == k; })) {
      throw DataError("unknown " + where + " field '" + key + "'");
    }
  }
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw DataError("cannot write " + p.string());
  out << text;
}

json errors_to_json(const eval::SlotErrors& e) {
  return json{{"missing", e.missing_classes}, {"superfluous", e.superfluous_classes}, {"repeated", e.repeated_classes},
              {"counts", {e.missing, e.superfluous, e.repeated}}};
}

eval::SlotErrors errors_from_json(const json& j) {
  eval::SlotErrors e;
  e.missing_classes = j.at("missing").get<std::vector<std::string>>();
  e.superfluous_classes = j.at("superfluous").get<std::vector<std::string>>();
  e.repeated_classes = j.at("repeated").get<std::vector<std::string>>();
  e.missing = j.at("counts").at(0).get<std::size_t>();
  e.superfluous = j.at("counts").at(1).get<std::size_t>();
  e.repeated = j.at("counts").at(2).get<std::size_t>();
  return e;
}

struct SetupSpec {
  enum Kind { greedy, beam, rerank } kind = greedy;
  std::size_t width = 1;
};

SetupSpec parse_setup(const std::string& s) {
  if (s == "greedy") return {SetupSpec::greedy, 1};
  const bool rr = s.ends_with("+rerank");
  const std::string body = rr ? s.substr(0, s.size() - 7) : s;
  if (body.starts_with("beam-")) {
    try {
      const std::size_t b = std::stoul(body.substr(5));
      if (b > 0) return {rr ? SetupSpec::rerank : SetupSpec::beam, b};
    } catch (const std::exception&) {
    }
  }
  throw std::invalid_argument("unknown setup '" + s + "' (greedy, beam-N, beam-N+rerank)");
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const json& j, const fs::path& base_dir, const fs::path& data_dir) {
  if (!j.is_object()) throw DataError("experiment config must be a JSON object");
  ExperimentConfig c;
  try {
    reject_unknown(j,
                   {"mode", "seed", "folds", "validation_das_per_fold", "beam_sizes", "synthetic_das",
                    "bootstrap_iterations", "train", "reranker", "rerank", "paths"},
                   "experiment config");
    if (j.contains("mode")) c.mode = parse_output_mode(j.at("mode").get<std::string>());
    read_field(j, "seed", c.seed);
    read_field(j, "folds", c.folds);
    read_field(j, "validation_das_per_fold", c.validation_das_per_fold);
    read_field(j, "beam_sizes", c.beam_sizes);
    read_field(j, "synthetic_das", c.synthetic_das);
    read_field(j, "bootstrap_iterations", c.bootstrap_iterations);
    if (j.contains("train")) c.train = train_config_from_json(j.at("train"));
    if (j.contains("reranker")) {
      const json& r = j.at("reranker");
      reject_unknown(r,
                     {"learning_rate", "embedding_size", "cell_size", "batch_size", "max_passes", "init_scale",
                      "threshold", "validation_weight"},
                     "reranker");
      read_field(r, "learning_rate", c.reranker.learning_rate);
      read_field(r, "embedding_size", c.reranker.embedding_size);
      read_field(r, "cell_size", c.reranker.cell_size);
      read_field(r, "batch_size", c.reranker.batch_size);
      read_field(r, "max_passes", c.reranker.max_passes);
      read_field(r, "init_scale", c.reranker.init_scale);
      read_field(r, "threshold", c.reranker.threshold);
      read_field(r, "validation_weight", c.reranker.validation_weight);
    } else {
      c.reranker.embedding_size = c.train.embedding_size;
      c.reranker.cell_size = c.train.cell_size;
    }
    if (j.contains("rerank")) {
      const json& r = j.at("rerank");
      reject_unknown(r, {"penalty_weight", "threshold", "expected_distance"}, "rerank");
      read_field(r, "penalty_weight", c.rerank.penalty_weight);
      read_field(r, "threshold", c.rerank.threshold);
      read_field(r, "expected_distance", c.rerank.expected_distance);
    }
    if (j.contains("paths")) {
      const json& p = j.at("paths");
      reject_unknown(p, {"corpus", "grammar", "realizer_rules", "slot_lexicon", "runs"}, "paths");
      auto path_field = [&](const char* key, fs::path& dst) {
        if (p.contains(key)) dst = resolve(p.at(key).get<std::string>(), base_dir);
      };
      path_field("corpus", c.paths.corpus);
      path_field("grammar", c.paths.grammar);
      path_field("realizer_rules", c.paths.realizer_rules);
      path_field("slot_lexicon", c.paths.slot_lexicon);
      path_field("runs", c.paths.runs);
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("experiment config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("experiment config: ") + e.what());
  }
  if (c.paths.grammar.empty()) c.paths.grammar = data_dir / "restaurant_grammar.json";
  if (c.paths.realizer_rules.empty()) c.paths.realizer_rules = data_dir / "realizer_rules.json";
  if (c.paths.slot_lexicon.empty()) c.paths.slot_lexicon = data_dir / "slot_lexicon.json";
  c.normalize();
  return c;
}

ExperimentConfig ExperimentConfig::load(const fs::path& path, const fs::path& data_dir) {
  return from_json(io::read_json_file(path), path.parent_path(), data_dir);
}

void ExperimentConfig::normalize() {
  std::sort(beam_sizes.begin(), beam_sizes.end());
  beam_sizes.erase(std::unique(beam_sizes.begin(), beam_sizes.end()), beam_sizes.end());
  if (beam_sizes.empty() || beam_sizes.front() == 0) throw DataError("beam sizes must be positive and non-empty");
  if (folds < 2) throw DataError("folds must be at least 2");
  if (bootstrap_iterations < eval::kMinBootstrapIterations) {
    throw DataError("bootstrap_iterations must be at least " + std::to_string(eval::kMinBootstrapIterations));
  }
  try {
    train.validate();
    reranker.validate();
    rerank.validate();
  } catch (const std::invalid_argument& e) {
    throw DataError(e.what());
  }
}

json ExperimentConfig::to_json() const {
  return json{{"mode", std::string(seqnlg::to_string(mode))},
              {"seed", seed},
              {"folds", folds},
              {"validation_das_per_fold", validation_das_per_fold},
              {"beam_sizes", beam_sizes},
              {"synthetic_das", synthetic_das},
              {"bootstrap_iterations", bootstrap_iterations},
              {"train", seqnlg::to_json(train)},
              {"reranker", reranker_train_to_json(reranker)},
              {"rerank",
               {{"penalty_weight", rerank.penalty_weight},
                {"threshold", rerank.threshold},
                {"expected_distance", rerank.expected_distance}}},
              {"paths",
               {{"corpus", paths.corpus.string()},
                {"grammar", paths.grammar.string()},
                {"realizer_rules", paths.realizer_rules.string()},
                {"slot_lexicon", paths.slot_lexicon.string()},
                {"runs", paths.runs.string()}}}};
}

std::string ExperimentConfig::hash() const {
  json j = to_json();
  j["paths"].erase("runs");
  // Data files enter through their contents, not their location.
  json contents;
  for (const char* key : {"corpus", "grammar", "realizer_rules", "slot_lexicon"}) {
    const fs::path p = j["paths"][key].get<std::string>();
    contents[key] = p.empty() || !fs::exists(p) ? std::string() : read_text(p);
  }
  j.erase("paths");
  j["contents"] = std::move(contents);
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : j.dump()) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

std::vector<std::string> ExperimentConfig::setups() const {
  std::vector<std::string> out{"greedy"};
  for (std::size_t b : beam_sizes) out.push_back("beam-" + std::to_string(b));
  for (std::size_t b : beam_sizes) {
    if (b > 1) out.push_back("beam-" + std::to_string(b) + "+rerank");
  }
  return out;
}

FoldPlan make_folds(std::size_t n_das, std::size_t folds, std::size_t validation_per_fold, std::uint64_t seed) {
  if (folds < 2) throw DataError("need at least 2 folds");
  if (n_das < folds) {
    throw DataError("corpus has " + std::to_string(n_das) + " DAs, fewer than " + std::to_string(folds) + " folds");
  }
  Rng rng(seed);
  std::vector<std::size_t> ids(n_das);
  for (std::size_t i = 0; i < n_das; ++i) ids[i] = i;
  rng.shuffle(ids);
  FoldPlan plan;
  plan.folds.resize(folds);
  for (std::size_t i = 0; i < n_das; ++i) plan.folds[i % folds].test.push_back(ids[i]);
  for (std::size_t f = 0; f < folds; ++f) {
    Fold& fold = plan.folds[f];
    const std::set<std::size_t> test(fold.test.begin(), fold.test.end());
    std::vector<std::size_t> rest;
    for (std::size_t id : ids) {
      if (!test.contains(id)) rest.push_back(id);
    }
    Rng fold_rng(mix_seed(seed, f + 1));
    fold_rng.shuffle(rest);
    const std::size_t nval = std::min(validation_per_fold, rest.size() - 1);
    fold.validation.assign(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(nval));
    fold.train.assign(rest.begin() + static_cast<std::ptrdiff_t>(nval), rest.end());
    std::sort(fold.train.begin(), fold.train.end());
    std::sort(fold.validation.begin(), fold.validation.end());
    std::sort(fold.test.begin(), fold.test.end());
  }
  return plan;
}

json to_json(const FoldPlan& plan) {
  json folds = json::array();
  for (const auto& f : plan.folds) {
    folds.push_back({{"train", f.train}, {"validation", f.validation}, {"test", f.test}});
  }
  return json{{"folds", std::move(folds)}};
}

FoldPlan fold_plan_from_json(const json& j) {
  FoldPlan plan;
  try {
    for (const auto& f : j.at("folds")) {
      plan.folds.push_back({f.at("train").get<std::vector<std::size_t>>(),
                            f.at("validation").get<std::vector<std::size_t>>(),
                            f.at("test").get<std::vector<std::size_t>>()});
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("fold plan: ") + e.what());
  }
  return plan;
}

TokenSequence target_tokens(const CorpusEntry& e, std::size_t r, OutputMode mode, const PluralLexicon& plurals) {
  if (mode == OutputMode::string) return tokenize_sentence(e.refs.at(r), plurals);
  if (!e.has_trees()) throw DataError("corpus entry " + std::to_string(e.id) + " has no tree for tree mode");
  return tree_to_bracketed(e.trees.at(r));
}

json to_json(const InstanceResult& r) {
  json j{{"id", r.id},
         {"fold", r.fold},
         {"setup", r.setup},
         {"output", r.output},
         {"tokens", r.tokens},
         {"text", r.text},
         {"log_prob", r.log_prob},
         {"truncated", r.truncated},
         {"recoveries", r.recoveries},
         {"errors", errors_to_json(r.errors)}};
  j["penalty"] = r.penalty ? json(*r.penalty) : json(nullptr);
  return j;
}

InstanceResult instance_from_json(const json& j) {
  InstanceResult r;
  r.id = j.at("id").get<std::size_t>();
  r.fold = j.at("fold").get<std::size_t>();
  r.setup = j.at("setup").get<std::string>();
  r.output = j.at("output").get<TokenSequence>();
  r.tokens = j.at("tokens").get<TokenSequence>();
  r.text = j.at("text").get<std::string>();
  r.log_prob = j.at("log_prob").get<double>();
  r.truncated = j.at("truncated").get<bool>();
  r.recoveries = j.at("recoveries").get<std::size_t>();
  r.errors = errors_from_json(j.at("errors"));
  if (!j.at("penalty").is_null()) r.penalty = j.at("penalty").get<double>();
  return r;
}

const SetupScore* CvReport::find(const std::string& setup) const {
  for (const auto& s : pooled) {
    if (s.setup == setup) return &s;
  }
  return nullptr;
}

std::string format_report_tsv(std::span<const SetupScore> rows) {
  std::string out = "Setup\tBLEU\tNIST\tMissing\tSuperfluous\tRepeated\n";
  for (const auto& r : rows) {
    out += r.setup;
    if (r.failed) {
      out += "\tFAILED\tFAILED\tFAILED\tFAILED\tFAILED\n";
      continue;
    }
    out += "\t" + fixed(r.bleu, 4) + "\t" + fixed(r.nist, 4) + "\t" + std::to_string(r.errors.missing) + "\t" +
           std::to_string(r.errors.superfluous) + "\t" + std::to_string(r.errors.repeated) + "\n";
  }
  return out;
}

Experiment::Experiment(ExperimentConfig config) : config_(std::move(config)) {
  config_.normalize();
  run_dir_ = config_.run_dir();
}

void Experiment::ensure_prepared() {
  if (!prepared_) prepare();
}

void Experiment::prepare() {
  rules_ = RealizationRules::load(config_.paths.realizer_rules);
  lexicon_ = eval::SlotPatternLexicon::load(config_.paths.slot_lexicon, rules_.plural_lexicon);
  const fs::path corpus_copy = run_dir_ / "corpus.jsonl";
  if (!config_.paths.corpus.empty()) {
    corpus_ = load_corpus(config_.paths.corpus);
  } else if (fs::exists(corpus_copy)) {
    corpus_ = load_corpus(corpus_copy);
  } else {
    const Grammar g = Grammar::load(config_.paths.grammar);
    corpus_ = synthesize_corpus(g, config_.synthetic_das, mix_seed(config_.seed, kCorpusStream));
  }
  if (corpus_.empty()) throw DataError("corpus is empty");
  for (const auto& e : corpus_) {
    if (config_.mode == OutputMode::tree && !e.has_trees()) {
      throw DataError("tree mode needs a tree for every reference; entry " + std::to_string(e.id) + " has none");
    }
    for (const auto& item : e.da.items()) {
      if (item.slot.empty() || item.value.empty()) continue;
      const std::string cls = slot_value_class(item);
      if (!lexicon_.knows(cls)) throw DataError("slot lexicon has no pattern for class '" + cls + "'");
    }
  }
  const fs::path plan_path = run_dir_ / "folds.json";
  if (fs::exists(plan_path)) {
    plan_ = fold_plan_from_json(io::read_json_file(plan_path));
  } else {
    plan_ = make_folds(corpus_.size(), config_.folds, config_.validation_das_per_fold,
                       mix_seed(config_.seed, kFoldStream));
  }
  fs::create_directories(run_dir_);
  if (!fs::exists(corpus_copy)) save_corpus(corpus_copy, corpus_);
  io::write_json_file(run_dir_ / "config.json", config_.to_json());
  io::write_json_file(plan_path, to_json(plan_));
  prepared_ = true;
}

const std::vector<CorpusEntry>& Experiment::corpus() {
  ensure_prepared();
  return corpus_;
}

const FoldPlan& Experiment::plan() {
  ensure_prepared();
  return plan_;
}

const RealizationRules& Experiment::rules() {
  ensure_prepared();
  return rules_;
}

const eval::SlotPatternLexicon& Experiment::slot_lexicon() {
  ensure_prepared();
  return lexicon_;
}

void Experiment::check_fold(std::size_t fold) {
  ensure_prepared();
  if (fold >= plan_.folds.size()) {
    throw std::invalid_argument("fold " + std::to_string(fold) + " out of range (0.." +
                                std::to_string(plan_.folds.size() - 1) + ")");
  }
}

fs::path Experiment::generator_path(std::size_t fold) const {
  return run_dir_ / ("fold-" + std::to_string(fold)) / ("generator-" + std::string(to_string(config_.mode)) + ".json");
}

fs::path Experiment::reranker_path(std::size_t fold) const {
  return run_dir_ / ("fold-" + std::to_string(fold)) / ("reranker-" + std::string(to_string(config_.mode)) + ".json");
}

fs::path Experiment::outputs_path(std::size_t fold) const {
  return run_dir_ / ("fold-" + std::to_string(fold)) / ("outputs-" + std::string(to_string(config_.mode)) + ".json");
}

GeneratorModel Experiment::train_generator(std::size_t fold) {
  check_fold(fold);
  const Fold& f = plan_.folds[fold];
  const PluralLexicon& plurals = rules_.plural_lexicon;
  std::vector<TokenSequence> inputs;
  std::vector<TokenSequence> outputs;
  for (std::size_t id : f.train) {
    const CorpusEntry& e = corpus_.at(id);
    for (std::size_t r = 0; r < e.refs.size(); ++r) {
      inputs.push_back(encode_da(e.da));
      outputs.push_back(target_tokens(e, r, config_.mode, plurals));
    }
  }
  GeneratorModel m;
  m.input_vocab = Vocabulary::build(inputs);
  m.output_vocab = Vocabulary::build(outputs);
  std::vector<TrainingPair> pairs;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    pairs.push_back({m.input_vocab.to_ids(inputs[i]), m.output_vocab.to_ids(outputs[i])});
  }
  std::vector<ValidationItem> validation;
  for (std::size_t id : f.validation) {
    const CorpusEntry& e = corpus_.at(id);
    ValidationItem item{m.input_vocab.to_ids(encode_da(e.da)), {}};
    for (std::size_t r = 0; r < e.refs.size(); ++r) item.refs.push_back(target_tokens(e, r, config_.mode, plurals));
    validation.push_back(std::move(item));
  }
  m.config = config_.train;
  m.config.seed = mix_seed(config_.seed, kGeneratorStream + fold);
  spdlog::info("fold {}: training {} generator on {} instances ({} validation DAs)", fold,
               to_string(config_.mode), pairs.size(), validation.size());
  TrainResult result = seqnlg::train_generator(
      pairs, validation, m.input_vocab, m.output_vocab, config_.mode, m.config,
      [&](const RestartReport& r, const PassRecord& p) {
        if (p.pass % 25 == 0) {
          spdlog::info("fold {} restart {} pass {}: loss {:.4f} validation BLEU {:.2f} (best {:.2f})", fold, r.restart,
                       p.pass, p.loss, p.bleu, r.best_bleu);
        }
      });
  m.params = std::move(result.params);
  m.report = std::move(result.report);
  m.training_ids = f.train;
  m.training_ids.insert(m.training_ids.end(), f.validation.begin(), f.validation.end());
  std::sort(m.training_ids.begin(), m.training_ids.end());
  save_model(generator_path(fold), m);
  spdlog::info("fold {}: generator validation BLEU {:.2f} (restart {})", fold, m.report.best_bleu,
               m.report.best_restart);
  return m;
}

RerankerModel Experiment::train_reranker(std::size_t fold) {
  check_fold(fold);
  const Fold& f = plan_.folds[fold];
  const PluralLexicon& plurals = rules_.plural_lexicon;
  auto view = [&](const CorpusEntry& e, std::size_t r) {
    return config_.mode == OutputMode::string ? tokenize_sentence(e.refs.at(r), plurals)
                                              : tree_to_flat(e.trees.at(r));
  };
  RerankerModel m;
  m.mode = config_.mode;
  std::vector<DialogueAct> das;
  std::vector<TokenSequence> views;
  for (std::size_t id : f.train) {
    const CorpusEntry& e = corpus_.at(id);
    das.push_back(e.da);
    for (std::size_t r = 0; r < e.refs.size(); ++r) views.push_back(view(e, r));
  }
  m.inventory = ClassInventory::build(das);
  m.vocab = Vocabulary::build(views);
  auto examples = [&](const std::vector<std::size_t>& ids) {
    std::vector<RerankerExample> out;
    for (std::size_t id : ids) {
      const CorpusEntry& e = corpus_.at(id);
      const ContentVector gold = da_to_content_vector(e.da, m.inventory).bits;
      for (std::size_t r = 0; r < e.refs.size(); ++r) out.push_back({m.vocab.to_ids(view(e, r)), gold});
    }
    return out;
  };
  const auto train = examples(f.train);
  const auto validation = examples(f.validation);
  m.config = config_.reranker;
  m.config.seed = mix_seed(config_.seed, kRerankerStream + fold);
  spdlog::info("fold {}: training reranker on {} instances over {} classes", fold, train.size(), m.inventory.size());
  RerankerTrainResult result = seqnlg::train_reranker(
      train, validation, RerankerDims{m.vocab.size(), m.inventory.size(), m.config.embedding_size, m.config.cell_size},
      m.config);
  m.params = std::move(result.params);
  m.report = std::move(result.report);
  m.training_ids = f.train;
  m.training_ids.insert(m.training_ids.end(), f.validation.begin(), f.validation.end());
  std::sort(m.training_ids.begin(), m.training_ids.end());
  save_reranker(reranker_path(fold), m);
  spdlog::info("fold {}: reranker selection score {} at pass {}", fold, m.report.best_score, m.report.best_pass);
  return m;
}

GeneratorModel Experiment::load_generator(std::size_t fold) const {
  const fs::path p = generator_path(fold);
  if (!fs::exists(p)) {
    throw DataError("missing model file " + p.string() + "; run `seqnlg train --fold " + std::to_string(fold) +
                    "` first");
  }
  GeneratorModel m = load_model(p);
  if (m.mode() != config_.mode) throw DataError(p.string() + " was trained for another output mode");
  return m;
}

RerankerModel Experiment::load_reranker(std::size_t fold) const {
  const fs::path p = reranker_path(fold);
  if (!fs::exists(p)) {
    throw DataError("missing model file " + p.string() + "; run `seqnlg train-reranker --fold " +
                    std::to_string(fold) + "` first");
  }
  return seqnlg::load_reranker(p);
}

InstanceResult Experiment::generate_one(const GeneratorModel& gen, const RerankerModel* rr, const CorpusEntry& entry,
                                        const std::string& setup) {
  ensure_prepared();
  const SetupSpec spec = parse_setup(setup);
  InstanceResult res;
  res.id = entry.id;
  res.setup = setup;
  IdSequence ids;
  if (spec.kind == SetupSpec::greedy) {
    GreedyResult g = gen.greedy(entry.da);
    ids = std::move(g.tokens);
    res.log_prob = g.log_prob;
    res.truncated = g.truncated;
  } else {
    std::vector<Hypothesis> nbest = gen.beam(entry.da, spec.width);
    std::size_t pick = 0;
    if (spec.kind == SetupSpec::rerank) {
      if (!rr) throw DataError("setup " + setup + " needs a reranker");
      std::vector<TokenSequence> outs;
      std::vector<double> lps;
      for (const auto& h : nbest) {
        outs.push_back(gen.output_vocab.to_tokens(h.tokens));
        lps.push_back(h.log_prob);
      }
      const auto ranked = rr->rerank(outs, lps, entry.da, config_.rerank);
      pick = ranked.front().original_rank;
      res.penalty = ranked.front().penalty;
    }
    ids = nbest[pick].tokens;
    res.log_prob = nbest[pick].log_prob;
    res.truncated = !nbest[pick].finished;
  }
  res.output = gen.output_vocab.to_tokens(ids);
  const PluralLexicon& plurals = rules_.plural_lexicon;
  std::string surface;
  if (config_.mode == OutputMode::string) {
    res.tokens = res.output;
    surface = detokenize(res.tokens);
    res.errors = eval::slot_errors(res.tokens, entry.da, lexicon_);
  } else {
    DeepSyntaxTree tree;
    if (!res.output.empty()) {
      try {
        TreeParse parsed = bracketed_to_tree(res.output);
        res.recoveries = parsed.recoveries;
        tree = std::move(parsed.tree);
      } catch (const ParseError&) {
        res.recoveries = 1;
      }
    }
    surface = tree.empty() ? std::string() : realize(tree, rules_).text;
    res.tokens = tokenize_sentence(surface, plurals);
    res.errors = eval::slot_errors(tree, entry.da, lexicon_);
  }
  res.text = relexicalize(surface, entry.da, entry.lex).text;
  return res;
}

std::vector<InstanceResult> Experiment::generate(std::size_t fold) {
  check_fold(fold);
  const Fold& f = plan_.folds[fold];
  const GeneratorModel gen = load_generator(fold);
  std::optional<RerankerModel> rr;
  const auto setups = config_.setups();
  const bool need_rr = std::any_of(setups.begin(), setups.end(), [](const std::string& s) { return s.ends_with("+rerank"); });
  if (need_rr) rr = load_reranker(fold);

  // No test DA may have been seen while training either model.
  for (const std::vector<std::size_t>* ids :
       {&gen.training_ids, rr ? &rr->training_ids : static_cast<const std::vector<std::size_t>*>(nullptr)}) {
    if (!ids) continue;
    const std::set<std::size_t> seen(ids->begin(), ids->end());
    for (std::size_t id : f.test) {
      if (seen.contains(id)) {
        throw DataError("test DA " + std::to_string(id) + " of fold " + std::to_string(fold) +
                        " appears in the model's training data");
      }
    }
  }

  std::vector<InstanceResult> out;
  json failures = json::object();
  for (const auto& setup : setups) {
    std::vector<InstanceResult> rows;
    try {
      for (std::size_t id : f.test) {
        InstanceResult r = generate_one(gen, rr ? &*rr : nullptr, corpus_.at(id), setup);
        r.fold = fold;
        rows.push_back(std::move(r));
      }
    } catch (const std::exception& e) {
      spdlog::error("fold {}: setup {} failed: {}", fold, setup, e.what());
      failures[setup] = e.what();
      continue;
    }
    out.insert(out.end(), std::make_move_iterator(rows.begin()), std::make_move_iterator(rows.end()));
  }
  json j = json::object();
  j["fold"] = fold;
  j["failures"] = failures;
  j["instances"] = json::array();
  for (const auto& r : out) j["instances"].push_back(to_json(r));
  io::write_json_file(outputs_path(fold), j);
  spdlog::info("fold {}: decoded {} test DAs under {} setups", fold, f.test.size(), setups.size());
  return out;
}

namespace {

SetupScore score_setup(const std::string& setup, const std::vector<const InstanceResult*>& rows,
                       const std::map<std::size_t, eval::ReferenceSet>& refs) {
  SetupScore s;
  s.setup = setup;
  s.instances = rows.size();
  std::vector<TokenSequence> hyps;
  std::vector<eval::ReferenceSet> rs;
  for (const auto* r : rows) {
    hyps.push_back(r->tokens);
    rs.push_back(refs.at(r->id));
    s.errors += r->errors;
  }
  s.bleu = eval::bleu(hyps, rs);
  s.nist = eval::nist(hyps, rs);
  return s;
}

}  // namespace

CvReport Experiment::evaluate() {
  ensure_prepared();
  std::vector<InstanceResult> all;
  std::map<std::string, std::string> failed;
  for (std::size_t k = 0; k < plan_.folds.size(); ++k) {
    const fs::path p = outputs_path(k);
    if (!fs::exists(p)) {
      throw DataError("missing outputs " + p.string() + "; run `seqnlg generate --fold " + std::to_string(k) + "` first");
    }
    const json j = io::read_json_file(p);
    for (const auto& [setup, msg] : j.at("failures").items()) failed.emplace(setup, msg.get<std::string>());
    for (const auto& r : j.at("instances")) all.push_back(instance_from_json(r));
  }
  std::map<std::size_t, eval::ReferenceSet> refs;
  for (const auto& e : corpus_) {
    eval::ReferenceSet rs;
    for (const auto& ref : e.refs) rs.push_back(tokenize_sentence(ref, rules_.plural_lexicon));
    refs.emplace(e.id, std::move(rs));
  }

  CvReport report;
  const auto setups = config_.setups();
  std::map<std::string, std::vector<const InstanceResult*>> by_setup;
  std::sort(all.begin(), all.end(), [](const InstanceResult& a, const InstanceResult& b) {
    return std::tie(a.id, a.setup) < std::tie(b.id, b.setup);
  });
  for (const auto& r : all) by_setup[r.setup].push_back(&r);
  for (const auto& setup : setups) {
    auto fit = failed.find(setup);
    const auto& rows = by_setup[setup];
    if (fit != failed.end() || rows.empty()) {
      SetupScore s;
      s.setup = setup;
      s.failed = true;
      s.error = fit != failed.end() ? fit->second : "no outputs";
      report.pooled.push_back(std::move(s));
      continue;
    }
    report.pooled.push_back(score_setup(setup, rows, refs));
    for (std::size_t k = 0; k < plan_.folds.size(); ++k) {
      std::vector<const InstanceResult*> fold_rows;
      for (const auto* r : rows) {
        if (r->fold == k) fold_rows.push_back(r);
      }
      if (!fold_rows.empty()) report.per_fold.emplace_back(k, score_setup(setup, fold_rows, refs));
    }
  }

  // Significance of each step of the pipeline at the largest beam.
  const std::string big = "beam-" + std::to_string(config_.largest_beam());
  const std::vector<std::pair<std::string, std::string>> pairs{{"greedy", big}, {big, big + "+rerank"}};
  std::uint64_t stream = 0;
  for (const auto& [a, b] : pairs) {
    const auto ra = by_setup.find(a);
    const auto rb = by_setup.find(b);
    if (ra == by_setup.end() || rb == by_setup.end() || ra->second.size() != rb->second.size() ||
        failed.contains(a) || failed.contains(b) || a == b) {
      continue;
    }
    std::vector<TokenSequence> ha;
    std::vector<TokenSequence> hb;
    std::vector<eval::ReferenceSet> rs;
    for (std::size_t i = 0; i < ra->second.size(); ++i) {
      ha.push_back(ra->second[i]->tokens);
      hb.push_back(rb->second[i]->tokens);
      rs.push_back(refs.at(ra->second[i]->id));
    }
    for (auto metric : {eval::CorpusMetric::bleu, eval::CorpusMetric::nist}) {
      const auto res = eval::paired_bootstrap(ha, hb, rs, metric, config_.bootstrap_iterations,
                                              mix_seed(mix_seed(config_.seed, kBootstrapStream), stream++));
      report.significance.push_back(
          {a, b, metric == eval::CorpusMetric::bleu ? "BLEU" : "NIST", res.p_value, res.iterations});
    }
  }
  report.instances = std::move(all);

  write_text(run_dir_ / "report.tsv", format_report_tsv(report.pooled));
  std::string per_fold = "Fold\tSetup\tBLEU\tNIST\tMissing\tSuperfluous\tRepeated\n";
  for (const auto& [k, s] : report.per_fold) {
    per_fold += std::to_string(k) + "\t" + s.setup + "\t" + fixed(s.bleu, 4) + "\t" + fixed(s.nist, 4) + "\t" +
                std::to_string(s.errors.missing) + "\t" + std::to_string(s.errors.superfluous) + "\t" +
                std::to_string(s.errors.repeated) + "\n";
  }
  write_text(run_dir_ / "per_fold.tsv", per_fold);
  std::string sig = "SystemA\tSystemB\tMetric\tP\tIterations\n";
  for (const auto& s : report.significance) {
    sig += s.system_a + "\t" + s.system_b + "\t" + s.metric + "\t" + fixed(s.p_value, 6) + "\t" +
           std::to_string(s.iterations) + "\n";
  }
  write_text(run_dir_ / "significance.tsv", sig);
  json inst = json::array();
  for (const auto& r : report.instances) {
    json j = to_json(r);
    j["da"] = corpus_.at(r.id).da.to_string();
    inst.push_back(std::move(j));
  }
  json failures = json::object();
  for (const auto& [setup, msg] : failed) failures[setup] = msg;
  io::write_json_file(run_dir_ / "instances.json", json{{"failures", failures}, {"instances", std::move(inst)}});
  return report;
}

CvReport Experiment::run() {
  prepare();
  const auto setups = config_.setups();
  const bool need_rr = std::any_of(setups.begin(), setups.end(), [](const std::string& s) { return s.ends_with("+rerank"); });
  for (std::size_t k = 0; k < plan_.folds.size(); ++k) {
    if (!fs::exists(generator_path(k))) train_generator(k);
    if (need_rr && !fs::exists(reranker_path(k))) train_reranker(k);
    generate(k);
  }
  return evaluate();
}

}  // namespace seqnlg
