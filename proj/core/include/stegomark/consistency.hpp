#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "stegomark/tokenizer.hpp"

namespace stegomark {

// Result of aligning a generated token sequence against the retokenization of
// its decoded text. Index sets follow set semantics over (id, span) pairs:
// a token is inconsistent when its pair does not occur anywhere in the other
// sequence. Either set may be empty while the other is not.
struct InconsistencyReport {
  std::vector<size_t> i_sit;  // indices into the generated sequence
  std::vector<size_t> i_cit;  // indices into the retokenized sequence
  bool consistent = true;
};

InconsistencyReport span_align(const Tokenizer& tk,
                               const TokenSequence& generated,
                               const TokenSequence& retokenized);

// True iff appending `candidate` to `history` makes the decode/encode round
// trip disagree with the token list, compared id-for-id. Total function: works
// whether or not the history itself is currently consistent.
bool is_candidate_level_it(const Tokenizer& tk,
                           std::span<const int> history,
                           int candidate);

// Windowed variant: re-encodes only a suffix window of the decoded text. The
// window is at least max_surface_len x 4 bytes and is extended left to the
// nearest word boundary, so it agrees exactly with the full re-encode whenever
// `history` itself is round-trip consistent. `history_text` must equal
// decode(history) and `history_spans` its spans.
bool is_candidate_level_it_windowed(const Tokenizer& tk,
                                    std::string_view history_text,
                                    std::span<const int> history_ids,
                                    std::span<const Span> history_spans,
                                    int candidate);

bool roundtrip_consistent(const Tokenizer& tk, const TokenSequence& seq);
bool roundtrip_consistent(const Tokenizer& tk, std::span<const int> ids);

// --- generation traces -------------------------------------------------------

struct PoolRecord {
  int id = 0;
  double p = 0.0;
  bool it_flag = false;
};

struct StepRecord {
  std::vector<PoolRecord> pool;  // top_m candidates; may be empty if unrecorded
  int emitted = -1;
  bool ti_now = false;  // round-trip mismatch after emitting this token
};

struct GenerationTrace {
  std::vector<StepRecord> steps;
  size_t i_sit = 0;
  size_t i_cit = 0;
  size_t generated_len = 0;    // |H| (prompt included)
  size_t retokenized_len = 0;  // |H'|
  bool final_consistent = true;
};

// Sentinel histogram key for inconsistency that never resolves.
inline constexpr int64_t kNeverResolves = -1;

struct RateAggregates {
  double text_level = 0.0;
  double token_level = 0.0;
  double candidate_number_ratio = 0.0;
  double candidate_prob_ratio = 0.0;
  std::optional<double> temporary_rate;  // nullopt = N/A (no IT emitted)
  std::map<int64_t, double> persistence_histogram;  // N -> fraction
  size_t traces = 0;
  size_t it_events = 0;
};

// Aggregates the per-step metrics over a batch of traces. Steps whose prefix
// is already inconsistent are excluded from the candidate-level ratios, and
// IT-emission events are only counted at consistent-prefix steps.
RateAggregates aggregate_rates(std::span<const GenerationTrace> traces,
                               int top_m = 64);

// JSON-lines trace IO: one step per line,
//   {"step":t,"pool":[{"id":..,"p":..,"it_flag":..}],"emitted":..,"ti_now":..}
void write_trace_steps(const std::filesystem::path& path,
                       const GenerationTrace& trace);
std::vector<StepRecord> read_trace_steps(const std::filesystem::path& path);

std::string rates_to_json(const RateAggregates& rates);

}  // namespace stegomark
