#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace stegomark {

// --- hex ---------------------------------------------------------------

std::string to_hex(std::string_view bytes);
std::string from_hex(std::string_view hex);  // throws ParseError on bad input

// --- bit strings ---------------------------------------------------------
//
// Messages and codec streams are plain MSB-first bit vectors; one byte of
// storage per bit keeps the code simple at desk scale.

using Bits = std::vector<uint8_t>;

Bits bits_from_bytes(std::string_view bytes);
std::string bytes_from_bits(const Bits& bits);  // zero-pads the last byte
Bits random_bits(size_t n, uint64_t seed);

// --- hashing -------------------------------------------------------------

uint64_t splitmix64(uint64_t x);

// Keyed 64-bit hash over a byte key plus a sequence of token ids.
// Every absorbed word passes through the splitmix64 finalizer, which gives
// full avalanche behavior.
uint64_t keyed_hash(std::string_view key, const std::vector<int>& context);

// --- deterministic RNG -----------------------------------------------------
//
// std::mt19937_64 has a standardized output sequence; the helpers below avoid
// std::uniform_*_distribution, whose outputs are implementation-defined.

class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1).
  double next_double() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform in (0, 1), endpoints excluded.
  double next_open_double() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Uniform in [0, n). n must be > 0.
  uint64_t next_below(uint64_t n) { return engine_() % n; }

 private:
  std::mt19937_64 engine_;
};

// Derives independent per-task seeds from a base seed.
inline uint64_t derive_seed(uint64_t base, uint64_t index) {
  return splitmix64(base ^ splitmix64(index + 0x1234567));
}

// --- parallel loop ---------------------------------------------------------
//
// Runs fn(i) for i in [0, n) on `threads` workers (0 = hardware concurrency).
// Work items must be independent; determinism comes from per-index seeding.
void parallel_for(size_t n, const std::function<void(size_t)>& fn,
                  unsigned threads = 0);

// --- small numeric helpers ---------------------------------------------------

double mean(const std::vector<double>& xs);
double sample_variance(const std::vector<double>& xs);

// Rank-statistic AUROC with ties counted 0.5.
double auroc(const std::vector<double>& positives,
             const std::vector<double>& negatives);

}  // namespace stegomark
