#include <string>
#include <vector>

#include <benchmark/benchmark.h>

#include "seqnlg/autograd.hpp"
#include "seqnlg/generator.hpp"
#include "seqnlg/metrics.hpp"
#include "seqnlg/random.hpp"
#include "seqnlg/realizer.hpp"
#include "seqnlg/reranker.hpp"
#include "seqnlg/synthesis.hpp"
#include "seqnlg/text.hpp"

using namespace seqnlg;

namespace {

const std::string kData = SEQNLG_DATA_DIR;

// Roughly the CI-profile model: 60 input types, 120 output types.
GeneratorParams model(std::size_t cell) {
  Rng rng(1);
  return GeneratorParams::random({60, 120, 50, cell}, OutputMode::string, rng, 0.1);
}

IdSequence input(std::size_t n) {
  IdSequence in(n);
  for (std::size_t i = 0; i < n; ++i) in[i] = Vocabulary::kReservedCount + (7 * i) % 56;
  return in;
}

void BM_SequenceLossAndGradient(benchmark::State& state) {
  const GeneratorParams p = model(static_cast<std::size_t>(state.range(0)));
  const IdSequence in = input(18);
  const IdSequence target = input(14);
  GeneratorParams g = GeneratorParams::zeros(p.dims, p.mode);
  for (auto _ : state) {
    nn::Tape tape;
    GeneratorVars vars = GeneratorVars::record(tape, p, g);
    tape.backward(sequence_loss(tape, vars, p, in, target));
    benchmark::DoNotOptimize(g.tensors().front()->data());
  }
}
BENCHMARK(BM_SequenceLossAndGradient)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_GreedyDecode(benchmark::State& state) {
  const GeneratorParams p = model(64);
  const IdSequence in = input(18);
  for (auto _ : state) benchmark::DoNotOptimize(greedy_decode(p, in, 30));
}
BENCHMARK(BM_GreedyDecode)->Unit(benchmark::kMicrosecond);

void BM_BeamSearch(benchmark::State& state) {
  const GeneratorParams p = model(64);
  const IdSequence in = input(18);
  for (auto _ : state) benchmark::DoNotOptimize(beam_search(p, in, static_cast<std::size_t>(state.range(0)), 30));
}
BENCHMARK(BM_BeamSearch)->Arg(5)->Arg(10)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_Classify(benchmark::State& state) {
  Rng rng(2);
  const RerankerParams p = RerankerParams::random({120, 40, 50, 64}, rng, 0.1);
  const IdSequence cand = input(14);
  for (auto _ : state) benchmark::DoNotOptimize(classify(p, cand, 0.5));
}
BENCHMARK(BM_Classify)->Unit(benchmark::kMicrosecond);

void BM_CorpusBleuNist(benchmark::State& state) {
  const auto corpus = synthesize_corpus(Grammar::load(kData + "/restaurant_grammar.json"), 202, 1);
  const RealizationRules rules = RealizationRules::load(kData + "/realizer_rules.json");
  std::vector<TokenSequence> hyps;
  std::vector<eval::ReferenceSet> refs;
  for (const auto& e : corpus) {
    hyps.push_back(tokenize_sentence(e.refs[0], rules.plural_lexicon));
    refs.push_back({tokenize_sentence(e.refs[1], rules.plural_lexicon)});
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(eval::bleu(hyps, refs));
    benchmark::DoNotOptimize(eval::nist(hyps, refs));
  }
}
BENCHMARK(BM_CorpusBleuNist)->Unit(benchmark::kMillisecond);

void BM_Realize(benchmark::State& state) {
  const auto corpus = synthesize_corpus(Grammar::load(kData + "/restaurant_grammar.json"), 50, 1);
  const RealizationRules rules = RealizationRules::load(kData + "/realizer_rules.json");
  for (auto _ : state) {
    for (const auto& e : corpus) benchmark::DoNotOptimize(realize(e.trees[0], rules));
  }
}
BENCHMARK(BM_Realize)->Unit(benchmark::kMicrosecond);

}  // namespace
BENCHMARK_MAIN();
