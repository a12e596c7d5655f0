#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "stegomark/codec.hpp"
#include "stegomark/lm.hpp"
#include "stegomark/session.hpp"
#include "stegomark/tokenizer.hpp"
#include "stegomark/util.hpp"

namespace stegomark {

struct SecretMessage {
  Bits bits;

  static SecretMessage from_hex(std::string_view hex);
  std::string to_hex() const;  // zero-pads to a whole byte
  size_t length() const { return bits.size(); }
  bool operator==(const SecretMessage&) const = default;
};

enum class Codec { arithmetic, huffman };
enum class Filter { none, stepwise, basic, mwis };
enum class LengthMode { out_of_band, length_prefixed };

constexpr size_t kLengthPrefixBits = 16;

struct StegoConfig {
  Codec codec = Codec::arithmetic;
  Filter filter = Filter::stepwise;
  SamplingConfig sampling;
  LengthMode length_mode = LengthMode::out_of_band;
  int precision = 32;        // arithmetic-coder register width (bits)
  size_t max_tokens = 4096;  // generation budget
};

struct EmbedResult {
  std::string stegotext;  // continuation only; the prompt is not repeated
  std::vector<int> tokens;
  size_t token_count = 0;
  double bpt = 0.0;
  std::vector<double> kld_trace;  // bits per step, filtered vs original pool
  double runtime_seconds = 0.0;
};

// --- pool filters -----------------------------------------------------------

// Removes every candidate that would break the round trip when appended to
// the session history; renormalizes. If the pool empties, inserts the highest
// probability vocabulary token outside the pool that passes the check
// ((prob desc, id asc) scan); if none exists throws NoConsistentContinuation.
CandidatePool filter_stepwise(const GenerationSession& session,
                              const CandidatePool& pool,
                              const LmDistribution& full_dist);

// Drops tokens whose surface is a strict prefix of another pool token's
// surface, plus tokens without a fixed visible rendering (specials and
// fragment leads), which prefix matching cannot recover; renormalizes.
CandidatePool filter_basic(const Tokenizer& tk, const CandidatePool& pool);

// Keeps the maximum-probability-weight antichain of the prefix partial order
// (dynamic programming over the pool's prefix trie). Equal-weight antichains
// resolve to the lexicographically smallest kept-id set. Specials dropped as
// in filter_basic.
CandidatePool filter_mwis(const Tokenizer& tk, const CandidatePool& pool);

// D(modified || original) in bits over modified's support. Throws if modified
// holds an id absent from original.
double pool_kld(const CandidatePool& original, const CandidatePool& modified);

// --- embedding / extraction -----------------------------------------------------

EmbedResult embed(const LanguageModel& lm, const Tokenizer& tk,
                  std::string_view prompt, const SecretMessage& message,
                  const StegoConfig& cfg);

// Inverts embed. `length_hint` is the message length in bits and is required
// with LengthMode::out_of_band.
SecretMessage extract(const LanguageModel& lm, const Tokenizer& tk,
                      std::string_view prompt, std::string_view stegotext,
                      const StegoConfig& cfg,
                      std::optional<size_t> length_hint = std::nullopt);

std::string embed_result_to_json(const EmbedResult& r);

}  // namespace stegomark
