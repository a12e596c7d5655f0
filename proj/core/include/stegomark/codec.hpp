#pragma once

#include <cstdint>
#include <vector>

#include "stegomark/lm.hpp"
#include "stegomark/util.hpp"

namespace stegomark {

// Serves bits from a payload, then deterministic pseudorandom padding.
// Random padding matters for the arithmetic coder: an all-zero tail can park
// the interval astride the midpoint indefinitely, deferring every bit as
// pending and stalling the commit counter. Padding is never recovered, so
// any fixed seed works.
class BitFeed {
 public:
  explicit BitFeed(Bits bits, uint64_t pad_seed = 0x9E3779B97F4A7C15ull)
      : bits_(std::move(bits)), pad_rng_(pad_seed) {}
  int next() {
    if (pos_ < bits_.size()) return bits_[pos_++];
    ++pos_;
    return int(pad_rng_.next_u64() & 1);
  }
  size_t consumed_real() const { return std::min(pos_, bits_.size()); }
  size_t payload_size() const { return bits_.size(); }

 private:
  Bits bits_;
  size_t pos_ = 0;
  Rng pad_rng_;
};

// Integer frequency table for a candidate pool, cumulative over the pool's
// stored (prob desc, id asc) order. Every entry gets a count of at least one;
// counts sum exactly to 1 << freq_bits.
struct PoolIntervals {
  std::vector<uint64_t> cum;  // size k+1, cum[0] == 0
  uint64_t total = 0;
};

PoolIntervals pool_intervals(const CandidatePool& pool, int freq_bits);

// --- fixed-precision arithmetic coder -----------------------------------------
//
// Witten/Neal/Cleary style integer coder with E1/E2/E3 renormalization.
// Embedding treats the message as a compressed stream and "decompresses" it
// into token choices (ArithmeticDecoder); extraction re-compresses the
// observed tokens and recovers the stream (ArithmeticEncoder). Both sides
// walk identical low/high trajectories, so the encoder's output bits equal
// the decoder's consumed bits position for position.

class ArithmeticEncoder {
 public:
  explicit ArithmeticEncoder(int precision);
  void push(const PoolIntervals& iv, size_t index);
  size_t emitted() const { return bits_.size(); }
  const Bits& bits() const { return bits_; }

 private:
  int precision_;
  uint64_t low_, high_;
  uint64_t pending_ = 0;
  Bits bits_;
  void emit(int bit);
};

class ArithmeticDecoder {
 public:
  ArithmeticDecoder(int precision, BitFeed feed);
  // Selects the entry whose interval contains the current code value and
  // narrows the state. Returns the index into the pool's stored order.
  size_t select(const PoolIntervals& iv);

 private:
  int precision_;
  uint64_t low_, high_, value_;
  BitFeed feed_;
};

// --- canonical Huffman ----------------------------------------------------------
//
// Code lengths come from the standard two-least-weights construction with
// deterministic (weight, creation index) tie-breaking; codes are assigned
// canonically in (length asc, pool order) so both sides derive identical
// tables from the pool alone. A single-entry pool gets the empty code.

struct HuffmanCode {
  std::vector<uint32_t> length;  // per pool index
  std::vector<uint64_t> code;    // MSB-first, `length` bits
};

HuffmanCode canonical_huffman(const CandidatePool& pool);

// Walks feed bits down the canonical table; returns the selected pool index.
size_t huffman_select(const HuffmanCode& hc, BitFeed& feed);

// Appends the code bits of `index` to `out`.
void huffman_emit(const HuffmanCode& hc, size_t index, Bits& out);

}  // namespace stegomark
