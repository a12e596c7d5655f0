#include <benchmark/benchmark.h>

#include "stegomark/fixtures.hpp"

using namespace stegomark;

static void BM_EncodeFixtureLine(benchmark::State& state) {
  Tokenizer tk = fixtures::ambiguous_tokenizer();
  std::string line =
      " nobody put the output into the work and played with the dog";
  for (auto _ : state) {
    TokenSequence seq = tk.encode(line);
    benchmark::DoNotOptimize(seq.ids.data());
  }
  state.SetBytesProcessed(int64_t(state.iterations()) * int64_t(line.size()));
}
BENCHMARK(BM_EncodeFixtureLine);

static void BM_EncodeIdsOnly(benchmark::State& state) {
  Tokenizer tk = fixtures::ambiguous_tokenizer();
  std::string line =
      " nobody put the output into the work and played with the dog";
  std::vector<int> out;
  for (auto _ : state) {
    tk.encode_ids(line, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetBytesProcessed(int64_t(state.iterations()) * int64_t(line.size()));
}
BENCHMARK(BM_EncodeIdsOnly);

static void BM_TrainSmall(benchmark::State& state) {
  std::string corpus = fixtures::fixture_corpus(100, 3);
  for (auto _ : state) {
    Tokenizer tk = Tokenizer::train(corpus, 120, {});
    benchmark::DoNotOptimize(tk.vocab_size());
  }
}
BENCHMARK(BM_TrainSmall);

BENCHMARK_MAIN();
