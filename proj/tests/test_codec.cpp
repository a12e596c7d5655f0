#include <doctest.h>

#include "stegomark/codec.hpp"
#include "stegomark/util.hpp"

using namespace stegomark;

namespace {

CandidatePool pool_of(std::vector<double> probs) {
  CandidatePool p;
  for (size_t i = 0; i < probs.size(); ++i)
    p.entries.push_back({int(i), probs[i]});
  return p;
}

// Random (prob desc, id asc)-ordered pool of size in [1, max_k].
CandidatePool random_pool(Rng& rng, size_t max_k) {
  size_t k = 1 + rng.next_below(max_k);
  std::vector<double> w(k);
  double sum = 0.0;
  for (auto& x : w) {
    x = 0.05 + rng.next_double();
    sum += x;
  }
  for (auto& x : w) x /= sum;
  std::sort(w.begin(), w.end(), std::greater<>());
  return pool_of(w);
}

}  // namespace

TEST_CASE("pool intervals sum exactly and keep every entry alive") {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    CandidatePool pool = random_pool(rng, 64);
    PoolIntervals iv = pool_intervals(pool, 16);
    CHECK(iv.cum.front() == 0);
    CHECK(iv.cum.back() == (1u << 16));
    for (size_t i = 0; i + 1 < iv.cum.size(); ++i)
      CHECK(iv.cum[i + 1] > iv.cum[i]);
  }
}

TEST_CASE("canonical huffman on the classic 1/2 1/4 1/4 pool") {
  HuffmanCode hc = canonical_huffman(pool_of({0.5, 0.25, 0.25}));
  CHECK(hc.length == std::vector<uint32_t>{1, 2, 2});
  CHECK(hc.code == std::vector<uint64_t>{0b0, 0b10, 0b11});

  // bits "10" select the second token
  BitFeed feed{Bits{1, 0}};
  CHECK(huffman_select(hc, feed) == 1);
}

TEST_CASE("single-entry pools carry no bits") {
  HuffmanCode hc = canonical_huffman(pool_of({1.0}));
  CHECK(hc.length == std::vector<uint32_t>{0});
  BitFeed feed{Bits{1, 1, 1}};
  CHECK(huffman_select(hc, feed) == 0);
  CHECK(feed.consumed_real() == 0);
  Bits out;
  huffman_emit(hc, 0, out);
  CHECK(out.empty());
}

TEST_CASE("huffman codes are prefix-free and decode their own emissions") {
  Rng rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    CandidatePool pool = random_pool(rng, 32);
    HuffmanCode hc = canonical_huffman(pool);
    if (pool.entries.size() > 1) {
      for (size_t i = 0; i < pool.entries.size(); ++i) {
        CHECK(hc.length[i] >= 1);
        for (size_t j = 0; j < pool.entries.size(); ++j) {
          if (i == j || hc.length[i] > hc.length[j]) continue;
          // code i must not prefix code j
          uint32_t shifted = hc.code[j] >> (hc.length[j] - hc.length[i]);
          CHECK((i == j || shifted != hc.code[i]));
        }
      }
    }
    // emitting then selecting yields the same index
    for (size_t i = 0; i < pool.entries.size(); ++i) {
      Bits bits;
      huffman_emit(hc, i, bits);
      BitFeed feed{bits};
      CHECK(huffman_select(hc, feed) == i);
    }
  }
}

TEST_CASE("arithmetic coder: encoder output equals decoder input") {
  // Decode a random bit stream into token picks over random pools, re-encode
  // the picks, and check the emitted bits reproduce the stream prefix.
  Rng rng(23);
  for (int precision : {16, 24, 32}) {
    for (int trial = 0; trial < 60; ++trial) {
      Bits payload = random_bits(96, rng.next_u64());
      std::vector<CandidatePool> pools;
      for (int s = 0; s < 400; ++s) pools.push_back(random_pool(rng, 20));

      ArithmeticDecoder dec(precision, BitFeed{payload});
      ArithmeticEncoder enc(precision);
      int fb = std::min(16, precision - 2);
      std::vector<size_t> picks;
      for (const auto& pool : pools) {
        PoolIntervals iv = pool_intervals(pool, fb);
        size_t idx = dec.select(iv);
        enc.push(iv, idx);
        picks.push_back(idx);
        if (enc.emitted() >= payload.size()) break;
      }
      REQUIRE(enc.emitted() >= payload.size());
      for (size_t i = 0; i < payload.size(); ++i)
        CHECK(enc.bits()[i] == payload[i]);

      // replaying the same picks emits the same bits
      ArithmeticEncoder replay(precision);
      for (size_t i = 0; i < picks.size(); ++i) {
        PoolIntervals iv = pool_intervals(pools[i], fb);
        replay.push(iv, picks[i]);
        if (replay.emitted() >= payload.size()) break;
      }
      for (size_t i = 0; i < payload.size(); ++i)
        CHECK(replay.bits()[i] == payload[i]);
    }
  }
}

TEST_CASE("arithmetic decoder respects point-mass pools") {
  // An interval covering the whole range neither narrows nor consumes bits.
  ArithmeticDecoder dec(32, BitFeed{random_bits(64, 9)});
  CandidatePool single = pool_of({1.0});
  PoolIntervals iv = pool_intervals(single, 16);
  for (int i = 0; i < 10; ++i) CHECK(dec.select(iv) == 0);
}
