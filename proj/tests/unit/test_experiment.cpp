#include <algorithm>
#include <filesystem>
#include <set>
#include <string>

#include <gtest/gtest.h>

#include "seqnlg/errors.hpp"
#include "seqnlg/experiment.hpp"
#include "seqnlg/model.hpp"

using namespace seqnlg;
namespace fs = std::filesystem;

namespace {

const fs::path kData = SEQNLG_DATA_DIR;

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("seqnlg_test_experiment_" + name);
  fs::remove_all(p);
  return p;
}

ExperimentConfig tiny_config(const fs::path& runs) {
  nlohmann::json j = {
      {"folds", 2},
      {"validation_das_per_fold", 2},
      {"synthetic_das", 12},
      {"beam_sizes", {1, 3}},
      {"bootstrap_iterations", 1000},
      {"train", {{"embedding_size", 6}, {"cell_size", 8}, {"max_passes", 3}, {"batch_size", 4}}},
      {"reranker", {{"embedding_size", 6}, {"cell_size", 8}, {"max_passes", 3}}},
  };
  ExperimentConfig c = ExperimentConfig::from_json(j, fs::current_path(), kData);
  c.paths.runs = runs;
  return c;
}

}  // namespace

TEST(Folds, FullSizedPlan) {
  const FoldPlan plan = make_folds(202, 10, 10, 5);
  ASSERT_EQ(plan.folds.size(), 10u);
  std::multiset<std::size_t> all_test;
  for (const Fold& f : plan.folds) {
    EXPECT_TRUE(f.test.size() == 20 || f.test.size() == 21);
    EXPECT_EQ(f.validation.size(), 10u);
    EXPECT_EQ(f.train.size() + f.validation.size() + f.test.size(), 202u);
    std::set<std::size_t> seen(f.train.begin(), f.train.end());
    for (std::size_t id : f.validation) EXPECT_TRUE(seen.insert(id).second);
    for (std::size_t id : f.test) EXPECT_TRUE(seen.insert(id).second);
    EXPECT_EQ(seen.size(), 202u);
    all_test.insert(f.test.begin(), f.test.end());
  }
  EXPECT_EQ(all_test.size(), 202u);
  EXPECT_EQ(std::set<std::size_t>(all_test.begin(), all_test.end()).size(), 202u);
}

TEST(Folds, SeededAndSerializable) {
  const FoldPlan a = make_folds(50, 2, 5, 1);
  const FoldPlan b = make_folds(50, 2, 5, 1);
  const FoldPlan c = make_folds(50, 2, 5, 2);
  EXPECT_EQ(to_json(a), to_json(b));
  EXPECT_NE(to_json(a), to_json(c));
  EXPECT_EQ(to_json(fold_plan_from_json(to_json(a))), to_json(a));
  EXPECT_THROW(make_folds(3, 4, 1, 1), DataError);
  EXPECT_THROW(make_folds(10, 1, 1, 1), DataError);
}

TEST(ExperimentConfig, ValidationAndSetups) {
  const fs::path runs = scratch("config");
  ExperimentConfig c = tiny_config(runs);
  EXPECT_EQ(c.setups(), (std::vector<std::string>{"greedy", "beam-1", "beam-3", "beam-3+rerank"}));
  EXPECT_EQ(c.largest_beam(), 3u);
  EXPECT_EQ(c.hash().size(), 16u);

  ExperimentConfig moved = c;
  moved.paths.runs = runs / "elsewhere";
  EXPECT_EQ(moved.hash(), c.hash());
  ExperimentConfig reseeded = c;
  reseeded.seed = 2;
  EXPECT_NE(reseeded.hash(), c.hash());

  auto bad = [](nlohmann::json j) { return ExperimentConfig::from_json(j, fs::current_path(), kData); };
  EXPECT_THROW(bad({{"folds", 1}}), DataError);
  EXPECT_THROW(bad({{"beam_sizes", {0, 5}}}), DataError);
  EXPECT_THROW(bad({{"beam_sizes", nlohmann::json::array()}}), DataError);
  EXPECT_THROW(bad({{"bootstrap_iterations", 10}}), DataError);
  EXPECT_THROW(bad({{"mode", "graph"}}), DataError);
  EXPECT_THROW(bad({{"bogus", 1}}), DataError);
  EXPECT_THROW(bad({{"rerank", {{"penalty_weight", -1}}}}), DataError);
  EXPECT_EQ(bad({{"beam_sizes", {10, 1, 10, 5}}}).beam_sizes, (std::vector<std::size_t>{1, 5, 10}));
}

TEST(Experiment, MissingModelsNameTheTrainingCommand) {
  const fs::path runs = scratch("missing");
  Experiment ex(tiny_config(runs));
  ex.prepare();
  try {
    ex.load_generator(1);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("seqnlg train --fold 1"), std::string::npos) << e.what();
  }
  try {
    ex.load_reranker(0);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("seqnlg train-reranker --fold 0"), std::string::npos) << e.what();
  }
  EXPECT_THROW(ex.evaluate(), DataError);
  fs::remove_all(runs);
}

TEST(Experiment, EndToEndTinyRun) {
  const fs::path runs = scratch("e2e");
  Experiment ex(tiny_config(runs));
  const CvReport report = ex.run();
  ASSERT_EQ(report.pooled.size(), 4u);
  for (const auto& row : report.pooled) {
    EXPECT_FALSE(row.failed) << row.setup << ": " << row.error;
    EXPECT_EQ(row.instances, 12u);
  }
  for (const char* f : {"report.tsv", "per_fold.tsv", "significance.tsv", "instances.json", "folds.json"}) {
    EXPECT_TRUE(fs::exists(ex.run_dir() / f)) << f;
  }
  // beam width 1 decodes exactly like greedy.
  const SetupScore* g = report.find("greedy");
  const SetupScore* b1 = report.find("beam-1");
  ASSERT_TRUE(g && b1);
  EXPECT_DOUBLE_EQ(g->bleu, b1->bleu);
  std::size_t compared = 0;
  for (const auto& a : report.instances) {
    if (a.setup != "greedy") continue;
    for (const auto& b : report.instances) {
      if (b.setup == "beam-1" && b.id == a.id) {
        EXPECT_EQ(a.output, b.output);
        ++compared;
      }
    }
  }
  EXPECT_EQ(compared, 12u);
  fs::remove_all(runs);
}

TEST(Experiment, ZeroPenaltyWeightReproducesBeam) {
  const fs::path runs = scratch("weight0");
  ExperimentConfig c = tiny_config(runs);
  c.rerank.penalty_weight = 0.0;
  Experiment ex(c);
  ex.prepare();
  const GeneratorModel gen = ex.train_generator(0);
  const RerankerModel rr = ex.train_reranker(0);
  for (std::size_t id : ex.plan().folds[0].test) {
    const CorpusEntry& e = ex.corpus()[id];
    const InstanceResult plain = ex.generate_one(gen, &rr, e, "beam-3");
    const InstanceResult ranked = ex.generate_one(gen, &rr, e, "beam-3+rerank");
    EXPECT_EQ(plain.output, ranked.output);
    EXPECT_DOUBLE_EQ(plain.log_prob, ranked.log_prob);
  }
  fs::remove_all(runs);
}

TEST(Experiment, TestDaLeakageIsRejected) {
  const fs::path runs = scratch("leak");
  Experiment ex(tiny_config(runs));
  ex.prepare();
  GeneratorModel gen = ex.train_generator(0);
  ex.train_reranker(0);
  gen.training_ids.push_back(ex.plan().folds[0].test.front());
  save_model(ex.generator_path(0), gen);
  EXPECT_THROW(ex.generate(0), DataError);
  fs::remove_all(runs);
}
