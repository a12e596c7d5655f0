#include <doctest.h>

#include <atomic>
#include <cmath>

#include "stegomark/errors.hpp"
#include "stegomark/util.hpp"

using namespace stegomark;

TEST_CASE("hex round trip") {
  std::string bytes = "\x00\xff\x10 abc";
  CHECK(from_hex(to_hex(bytes)) == bytes);
  CHECK(to_hex("\xde\xad") == "dead");
  CHECK_THROWS_AS(from_hex("abc"), ParseError);
  CHECK_THROWS_AS(from_hex("zz"), ParseError);
}

TEST_CASE("bit packing") {
  Bits b = bits_from_bytes("\xA5");
  CHECK(b == Bits{1, 0, 1, 0, 0, 1, 0, 1});
  CHECK(bytes_from_bits(b) == "\xA5");
  Bits three{1, 0, 1};
  CHECK(bytes_from_bits(three) == "\xA0");
}

TEST_CASE("keyed hash avalanche-ish behavior") {
  uint64_t a = keyed_hash("key", {1, 2, 3});
  uint64_t b = keyed_hash("key", {1, 2, 4});
  uint64_t c = keyed_hash("kez", {1, 2, 3});
  CHECK(a != b);
  CHECK(a != c);
  CHECK(keyed_hash("key", {1, 2, 3}) == a);
}

TEST_CASE("rng determinism and ranges") {
  Rng r1(42), r2(42);
  for (int i = 0; i < 100; ++i) CHECK(r1.next_u64() == r2.next_u64());
  Rng r3(7);
  for (int i = 0; i < 1000; ++i) {
    double d = r3.next_double();
    CHECK(d >= 0.0);
    CHECK(d < 1.0);
    double o = r3.next_open_double();
    CHECK(o > 0.0);
    CHECK(o < 1.0);
  }
}

TEST_CASE("parallel_for covers every index once") {
  std::vector<std::atomic<int>> hits(1000);
  parallel_for(1000, [&](size_t i) { hits[i]++; });
  for (auto& h : hits) CHECK(h.load() == 1);
}

TEST_CASE("auroc") {
  CHECK(auroc({2, 3}, {1, 2.5}) == doctest::Approx(0.75));
  CHECK(auroc({5, 6, 7}, {1, 2, 3}) == doctest::Approx(1.0));
  CHECK(auroc({1, 2, 3}, {1, 2, 3}) == doctest::Approx(0.5));

  // brute-force pair counting oracle on random lists
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> pos, neg;
    for (int i = 0; i < 17; ++i) pos.push_back(double(rng.next_below(8)));
    for (int i = 0; i < 23; ++i) neg.push_back(double(rng.next_below(8)));
    double wins = 0.0;
    for (double p : pos)
      for (double n : neg) wins += p > n ? 1.0 : (p == n ? 0.5 : 0.0);
    CHECK(auroc(pos, neg) ==
          doctest::Approx(wins / double(pos.size() * neg.size())));
  }
}
