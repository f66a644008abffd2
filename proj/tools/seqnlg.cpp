// seqnlg: cross-validation experiments for the seq2seq generator.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 training failure.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "seqnlg/corpus.hpp"
#include "seqnlg/errors.hpp"
#include "seqnlg/experiment.hpp"
#include "seqnlg/random.hpp"
#include "seqnlg/synthesis.hpp"

namespace fs = std::filesystem;
using namespace seqnlg;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kTraining = 3 };

struct GlobalOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> mode;
  std::string runs;
  std::string data_dir = SEQNLG_DATA_DIR;
  bool verbose = false;
  bool quiet = false;
};

ExperimentConfig make_config(const GlobalOptions& g) {
  ExperimentConfig c = g.config.empty() ? ExperimentConfig::from_json(nlohmann::json::object(), fs::current_path(), g.data_dir)
                                        : ExperimentConfig::load(g.config, g.data_dir);
  if (g.seed) c.seed = *g.seed;
  if (g.mode) c.mode = parse_output_mode(*g.mode);
  if (!g.runs.empty()) c.paths.runs = g.runs;
  c.normalize();
  return c;
}

std::vector<std::size_t> fold_list(Experiment& ex, const std::optional<std::size_t>& fold) {
  if (fold) return {*fold};
  std::vector<std::size_t> all(ex.plan().folds.size());
  for (std::size_t k = 0; k < all.size(); ++k) all[k] = k;
  return all;
}

void print_report(const CvReport& r) {
  std::cout << format_report_tsv(r.pooled);
  for (const auto& s : r.significance) {
    std::cout << "# " << s.system_a << " vs " << s.system_b << " " << s.metric << ": p = " << s.p_value << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sequence-to-sequence NLG from dialogue acts: training, decoding and evaluation"};
  app.require_subcommand(1);
  GlobalOptions g;
  app.add_option("--config", g.config, "Experiment config (JSON)")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Override the experiment seed");
  app.add_option("--mode", g.mode, "Output mode")->check(CLI::IsMember({"string", "tree"}));
  app.add_option("--runs", g.runs, "Root directory for run directories");
  app.add_option("--data-dir", g.data_dir, "Directory with the shipped grammar, rules and lexicon");
  app.add_flag("-v,--verbose", g.verbose, "Debug logging");
  app.add_flag("-q,--quiet", g.quiet, "Only warnings and errors");

  auto* synth = app.add_subcommand("synthesize", "Write a synthetic corpus");
  std::string grammar_path;
  std::size_t n_das = 202;
  std::string out_path;
  synth->add_option("--grammar", grammar_path, "Grammar file (default: shipped restaurant grammar)");
  synth->add_option("-n,--das", n_das, "Number of distinct DAs")->check(CLI::PositiveNumber);
  synth->add_option("-o,--out", out_path, "Output JSONL")->required();

  auto* prepare = app.add_subcommand("prepare", "Create the run directory, corpus copy and fold plan");

  std::optional<std::size_t> fold;
  auto* train = app.add_subcommand("train", "Train the generator for one fold (default: all folds)");
  train->add_option("--fold", fold, "Fold index");
  auto* train_rr = app.add_subcommand("train-reranker", "Train the reranker for one fold (default: all folds)");
  train_rr->add_option("--fold", fold, "Fold index");

  auto* generate = app.add_subcommand("generate", "Decode test DAs, or one ad hoc DA with --da");
  std::string setup = "greedy";
  std::string da_text;
  std::vector<std::string> lex_pairs;
  generate->add_option("--fold", fold, "Fold index (required with --da)");
  generate->add_option("--setup", setup, "greedy, beam-N or beam-N+rerank (with --da)");
  generate->add_option("--da", da_text, "Dialogue act, e.g. 'inform(name=X-name, food=Chinese)'");
  generate->add_option("--lex", lex_pairs, "Placeholder fillers, e.g. 'X-name=Golden Wok'");

  auto* evaluate = app.add_subcommand("evaluate", "Score all fold outputs and write the reports");
  auto* cv = app.add_subcommand("cv", "Prepare, train, generate and evaluate every fold");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }
  spdlog::set_default_logger(spdlog::stderr_color_mt("seqnlg"));
  spdlog::set_level(g.verbose ? spdlog::level::debug : g.quiet ? spdlog::level::warn : spdlog::level::info);

  try {
    if (*synth) {
      const Grammar grammar = Grammar::load(grammar_path.empty() ? fs::path(g.data_dir) / "restaurant_grammar.json"
                                                                 : fs::path(grammar_path));
      const std::uint64_t seed = g.seed.value_or(1);
      save_corpus(out_path, synthesize_corpus(grammar, n_das, seed));
      spdlog::info("wrote {} DAs to {}", n_das, out_path);
      return kOk;
    }

    Experiment ex(make_config(g));
    if (*prepare) {
      ex.prepare();
      std::cout << ex.run_dir().string() << "\n";
    } else if (*train) {
      for (std::size_t k : fold_list(ex, fold)) ex.train_generator(k);
    } else if (*train_rr) {
      for (std::size_t k : fold_list(ex, fold)) ex.train_reranker(k);
    } else if (*generate) {
      if (da_text.empty()) {
        for (std::size_t k : fold_list(ex, fold)) ex.generate(k);
      } else {
        if (!fold) throw CLI::ValidationError("--fold", "is required with --da");
        CorpusEntry entry;
        entry.da = parse_da(da_text);
        for (const auto& p : lex_pairs) {
          const auto eq = p.find('=');
          if (eq == std::string::npos) throw CLI::ValidationError("--lex", "expects PLACEHOLDER=VALUE");
          entry.lex[p.substr(0, eq)] = p.substr(eq + 1);
        }
        ex.prepare();
        const GeneratorModel gen = ex.load_generator(*fold);
        std::optional<RerankerModel> rr;
        if (setup.ends_with("+rerank")) rr = ex.load_reranker(*fold);
        const InstanceResult r = ex.generate_one(gen, rr ? &*rr : nullptr, entry, setup);
        std::cout << r.text << "\n";
        spdlog::debug("decoder output: {}", fmt::join(r.output, " "));
      }
    } else if (*evaluate) {
      print_report(ex.evaluate());
    } else if (*cv) {
      print_report(ex.run());
    }
  } catch (const CLI::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const TrainingError& e) {
    std::cerr << "training failed: " << e.what() << "\n";
    return kTraining;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kData;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  }
  return kOk;
}
