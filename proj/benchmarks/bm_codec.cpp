#include <benchmark/benchmark.h>

#include "stegomark/codec.hpp"
#include "stegomark/util.hpp"

using namespace stegomark;

namespace {
CandidatePool make_pool(Rng& rng, size_t k) {
  CandidatePool p;
  double sum = 0;
  std::vector<double> w(k);
  for (auto& x : w) {
    x = 0.05 + rng.next_double();
    sum += x;
  }
  std::sort(w.begin(), w.end(), std::greater<>());
  for (size_t i = 0; i < k; ++i) p.entries.push_back({int(i), w[i] / sum});
  return p;
}
}  // namespace

static void BM_ArithmeticRoundTrip(benchmark::State& state) {
  Rng rng(3);
  std::vector<CandidatePool> pools;
  for (int i = 0; i < 64; ++i) pools.push_back(make_pool(rng, 16));
  std::vector<PoolIntervals> ivs;
  for (const auto& p : pools) ivs.push_back(pool_intervals(p, 16));
  Bits payload = random_bits(128, 9);
  for (auto _ : state) {
    ArithmeticDecoder dec(32, BitFeed{payload});
    ArithmeticEncoder enc(32);
    for (const auto& iv : ivs) {
      size_t idx = dec.select(iv);
      enc.push(iv, idx);
      if (enc.emitted() >= payload.size()) break;
    }
    benchmark::DoNotOptimize(enc.bits().data());
  }
}
BENCHMARK(BM_ArithmeticRoundTrip);

static void BM_CanonicalHuffman(benchmark::State& state) {
  Rng rng(4);
  CandidatePool pool = make_pool(rng, size_t(state.range(0)));
  for (auto _ : state) {
    HuffmanCode hc = canonical_huffman(pool);
    benchmark::DoNotOptimize(hc.code.data());
  }
}
BENCHMARK(BM_CanonicalHuffman)->Arg(16)->Arg(64)->Arg(256);
