#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "stegomark/lm.hpp"
#include "stegomark/tokenizer.hpp"

namespace stegomark {

enum class Scheme { lefthash, selfhash, unigram, gumbel };

Scheme scheme_from_string(std::string_view name);
std::string scheme_to_string(Scheme s);

struct SchemeConfig {
  Scheme kind = Scheme::lefthash;
  std::string key;      // secret key bytes
  double gamma = 0.5;   // green list fraction (logit-based schemes)
  double delta = 2.0;   // green logit boost
  int h = -1;           // context width; -1 selects the scheme default
  int vocab_size = 0;

  // Defaults: lefthash 1, selfhash 4, gumbel 5, unigram 0 (context-free).
  int effective_h() const;
};

struct ScoreTrace {
  std::vector<size_t> positions;  // token index within the scored sequence
  std::vector<int> tokens;
  std::vector<double> phis;
  size_t scored() const { return phis.size(); }
};

// Green indicator vector (exactly floor(gamma*|V|) ones) for logit-based
// schemes; context must hold effective_h() ids (ignored for unigram).
std::vector<uint8_t> green_vector(const SchemeConfig& cfg,
                                  std::span<const int> context);

// Per-token uniforms in (0,1) for the sampling-based scheme.
std::vector<double> gumbel_vector(const SchemeConfig& cfg,
                                  std::span<const int> context);

struct RollbackConfig {
  int q = 10;             // observation period (tokens)
  int max_rollbacks = 32; // budget per generation
};

struct WatermarkResult {
  std::string text;  // continuation only
  std::vector<int> tokens;
  ScoreTrace trace;  // embedding-time scores at full-context positions
  int rollbacks = 0;
  size_t transient_episodes = 0;  // inconsistency episodes that self-resolved
  size_t rolled_back_episodes = 0;
  double runtime_seconds = 0.0;
};

// Token-by-token embedding. With `rollback` set, an inconsistency episode is
// observed for q tokens; if it persists, the offender and everything after it
// are deleted, the offender is banned at that position, and generation
// resumes. An episode still open when the target length is reached is treated
// as stable and rolled back, so the final output is round-trip consistent.
WatermarkResult embed_watermark(const LanguageModel& lm, const Tokenizer& tk,
                                std::string_view prompt,
                                const SchemeConfig& cfg, size_t t_target,
                                const std::optional<RollbackConfig>& rollback,
                                uint64_t seed);

// Detector-side scoring: retokenizes the text (prompt prepended when given)
// and scores every position that has a full h-token context and lies in the
// text portion. Throws std::invalid_argument when nothing is scorable.
ScoreTrace score_text(const SchemeConfig& cfg, const Tokenizer& tk,
                      std::string_view text, std::string_view prompt = {});

// Aggregate strength: logit-based (sum(phi) - gamma*T)/sqrt(T*gamma*(1-gamma));
// gumbel sum(phi)/sqrt(T) - sqrt(T). Throws when the trace is empty.
double strength(const ScoreTrace& trace, const SchemeConfig& cfg);

// Score-trace JSONL: {"pos":..,"token":..,"phi":..} per line.
void write_score_trace(const std::filesystem::path& path,
                       const ScoreTrace& trace);
ScoreTrace read_score_trace(const std::filesystem::path& path);

}  // namespace stegomark
