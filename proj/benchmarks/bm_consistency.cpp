#include <benchmark/benchmark.h>

#include "stegomark/consistency.hpp"
#include "stegomark/fixtures.hpp"
#include "stegomark/util.hpp"

using namespace stegomark;

namespace {
struct Setup {
  Tokenizer tk = fixtures::ambiguous_tokenizer();
  std::string prompt;
  TokenSequence history;
  Setup() {
    prompt = fixtures::prompts_from_corpus(fixtures::fixture_corpus(), 1,
                                           true, 40, 5)[0];
    history = tk.encode(prompt);
  }
};
}  // namespace

static void BM_CandidateCheckWindowed(benchmark::State& state) {
  static Setup s;
  Rng rng(7);
  for (auto _ : state) {
    int cand = int(rng.next_below(uint64_t(s.tk.vocab_size())));
    benchmark::DoNotOptimize(is_candidate_level_it_windowed(
        s.tk, s.prompt, s.history.ids, s.history.spans, cand));
  }
}
BENCHMARK(BM_CandidateCheckWindowed);

static void BM_CandidateCheckFull(benchmark::State& state) {
  static Setup s;
  Rng rng(7);
  for (auto _ : state) {
    int cand = int(rng.next_below(uint64_t(s.tk.vocab_size())));
    benchmark::DoNotOptimize(is_candidate_level_it(s.tk, s.history.ids, cand));
  }
}
BENCHMARK(BM_CandidateCheckFull);
