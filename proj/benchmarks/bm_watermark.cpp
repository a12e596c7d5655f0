#include <benchmark/benchmark.h>

#include "stegomark/fixtures.hpp"
#include "stegomark/watermark.hpp"

using namespace stegomark;

namespace {
struct Setup {
  Tokenizer tk = fixtures::calibration_tokenizer();
  HashLm lm = fixtures::fixture_hash(tk, 1.0);
  std::string prompt = "stan grear and the ploung";
};
}  // namespace

static void BM_WatermarkEmbed(benchmark::State& state) {
  static Setup s;
  SchemeConfig cfg;
  cfg.kind = Scheme::lefthash;
  cfg.key = "bench";
  cfg.vocab_size = s.tk.vocab_size();
  bool rollback = state.range(0) != 0;
  uint64_t seed = 0;
  for (auto _ : state) {
    std::optional<RollbackConfig> rb;
    if (rollback) rb = RollbackConfig{10, 32};
    WatermarkResult wr =
        embed_watermark(s.lm, s.tk, s.prompt, cfg, 64, rb, seed++);
    benchmark::DoNotOptimize(wr.tokens.data());
  }
  state.SetItemsProcessed(int64_t(state.iterations()) * 64);
}
BENCHMARK(BM_WatermarkEmbed)->Arg(0)->Arg(1);

static void BM_GreenVector(benchmark::State& state) {
  static Setup s;
  SchemeConfig cfg;
  cfg.kind = Scheme::lefthash;
  cfg.key = "bench";
  cfg.vocab_size = s.tk.vocab_size();
  std::vector<int> ctx{42};
  for (auto _ : state) {
    auto v = green_vector(cfg, ctx);
    benchmark::DoNotOptimize(v.data());
    ctx[0] = (ctx[0] + 1) % cfg.vocab_size;
  }
}
BENCHMARK(BM_GreenVector);
