#include "seqnlg/model.hpp"

#include <set>
#include <string>

#include "seqnlg/errors.hpp"
#include "seqnlg/model_io.hpp"

namespace seqnlg {

using nlohmann::json;

namespace {

constexpr std::string_view kKind = "seqnlg-generator";

}  // namespace

IdSequence GeneratorModel::encode_input(const DialogueAct& da) const {
  return input_vocab.to_ids(encode_da(da));
}

GreedyResult GeneratorModel::greedy(const DialogueAct& da) const {
  return greedy_decode(params, encode_input(da), max_length(), config.zero_init_cell);
}

std::vector<Hypothesis> GeneratorModel::beam(const DialogueAct& da, std::size_t beam_size) const {
  return beam_search(params, encode_input(da), beam_size, max_length(), config.zero_init_cell);
}

json to_json(const TrainConfig& c) {
  return json{{"learning_rate", c.learning_rate},
              {"embedding_size", c.embedding_size},
              {"cell_size", c.cell_size},
              {"batch_size", c.batch_size},
              {"max_passes", c.max_passes},
              {"patience_passes", c.patience_passes},
              {"top_k_tracked", c.top_k_tracked},
              {"restarts", c.restarts},
              {"max_decode_length", c.max_decode_length},
              {"seed", c.seed},
              {"init_scale", c.init_scale},
              {"zero_init_cell", c.zero_init_cell},
              {"target_bleu", c.target_bleu}};
}

TrainConfig train_config_from_json(const json& j) {
  if (!j.is_object()) throw DataError("train config must be an object");
  TrainConfig c;
  const json defaults = to_json(c);
  for (const auto& [key, value] : j.items()) {
    if (!defaults.contains(key)) throw DataError("unknown train config field '" + key + "'");
  }
  try {
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) j.at(key).get_to(field);
    };
    get("learning_rate", c.learning_rate);
    get("embedding_size", c.embedding_size);
    get("cell_size", c.cell_size);
    get("batch_size", c.batch_size);
    get("max_passes", c.max_passes);
    get("patience_passes", c.patience_passes);
    get("top_k_tracked", c.top_k_tracked);
    get("restarts", c.restarts);
    get("max_decode_length", c.max_decode_length);
    get("seed", c.seed);
    get("init_scale", c.init_scale);
    get("zero_init_cell", c.zero_init_cell);
    get("target_bleu", c.target_bleu);
  } catch (const json::exception& e) {
    throw DataError(std::string("train config: ") + e.what());
  }
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw DataError(e.what());
  }
  return c;
}

json report_to_json(const TrainReport& r) {
  json restarts = json::array();
  for (const auto& rr : r.restarts) {
    json history = json::array();
    for (const auto& p : rr.history) history.push_back({p.pass, p.loss, p.bleu});
    restarts.push_back({{"restart", rr.restart},
                        {"seed", rr.seed},
                        {"diverged", rr.diverged},
                        {"early_stopped", rr.early_stopped},
                        {"passes", rr.history.size()},
                        {"best_pass", rr.best_pass},
                        {"best_bleu", rr.best_bleu},
                        {"history", std::move(history)}});
  }
  return json{{"best_restart", r.best_restart}, {"best_bleu", r.best_bleu}, {"restarts", std::move(restarts)}};
}

namespace {

TrainReport report_from_json(const json& j) {
  TrainReport r;
  r.best_restart = j.at("best_restart").get<std::size_t>();
  r.best_bleu = j.at("best_bleu").get<double>();
  for (const auto& jr : j.at("restarts")) {
    RestartReport rr;
    rr.restart = jr.at("restart").get<std::size_t>();
    rr.seed = jr.at("seed").get<std::uint64_t>();
    rr.diverged = jr.at("diverged").get<bool>();
    rr.early_stopped = jr.at("early_stopped").get<bool>();
    rr.best_pass = jr.at("best_pass").get<std::size_t>();
    rr.best_bleu = jr.at("best_bleu").get<double>();
    for (const auto& h : jr.at("history")) {
      rr.history.push_back({h.at(0).get<std::size_t>(), h.at(1).get<double>(), h.at(2).get<double>()});
    }
    r.restarts.push_back(std::move(rr));
  }
  return r;
}

}  // namespace

json params_to_json(const GeneratorParams& p) {
  json tensors = json::object();
  p.visit([&](const char* name, const Tensor& t) { tensors[name] = io::tensor_to_json(t); });
  return json{{"mode", std::string(to_string(p.mode))},
              {"dims",
               {{"input_vocab", p.dims.input_vocab},
                {"output_vocab", p.dims.output_vocab},
                {"embedding", p.dims.embedding},
                {"cell", p.dims.cell}}},
              {"tensors", std::move(tensors)}};
}

GeneratorParams params_from_json(const json& j) {
  GeneratorParams p;
  try {
    const json& d = j.at("dims");
    GeneratorDims dims{d.at("input_vocab").get<std::size_t>(), d.at("output_vocab").get<std::size_t>(),
                       d.at("embedding").get<std::size_t>(), d.at("cell").get<std::size_t>()};
    p = GeneratorParams::zeros(dims, parse_output_mode(j.at("mode").get<std::string>()));
  } catch (const json::exception& e) {
    throw DataError(std::string("generator parameters: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("generator parameters: ") + e.what());
  }
  const json& tensors = j.at("tensors");
  std::set<std::string> expected;
  p.visit([&](const char* name, Tensor& t) {
    expected.insert(name);
    if (!tensors.contains(name)) throw DataError(std::string("generator parameters lack tensor '") + name + "'");
    t = io::tensor_from_json(tensors.at(name), name, t.shape());
  });
  for (const auto& [key, value] : tensors.items()) {
    if (!expected.contains(key)) throw DataError("generator parameters have unexpected tensor '" + key + "'");
  }
  p.validate();
  return p;
}

void save_model(const std::filesystem::path& path, const GeneratorModel& model) {
  json j = io::make_header(kKind);
  j["config"] = to_json(model.config);
  j["input_vocab"] = io::vocabulary_to_json(model.input_vocab);
  j["output_vocab"] = io::vocabulary_to_json(model.output_vocab);
  j["training_ids"] = model.training_ids;
  j["report"] = report_to_json(model.report);
  j["params"] = params_to_json(model.params);
  io::write_json_file(path, j);
}

GeneratorModel load_model(const std::filesystem::path& path) {
  const json j = io::read_json_file(path);
  io::check_header(j, kKind);
  GeneratorModel m;
  try {
    m.config = train_config_from_json(j.at("config"));
    m.input_vocab = io::vocabulary_from_json(j.at("input_vocab"));
    m.output_vocab = io::vocabulary_from_json(j.at("output_vocab"));
    m.training_ids = j.at("training_ids").get<std::vector<std::size_t>>();
    m.report = report_from_json(j.at("report"));
    m.params = params_from_json(j.at("params"));
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  if (m.params.dims.input_vocab != m.input_vocab.size() || m.params.dims.output_vocab != m.output_vocab.size()) {
    throw DataError(path.string() + ": parameter shapes disagree with the stored vocabularies");
  }
  return m;
}

}  // namespace seqnlg
