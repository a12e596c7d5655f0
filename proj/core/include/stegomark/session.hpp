#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "stegomark/consistency.hpp"
#include "stegomark/lm.hpp"
#include "stegomark/tokenizer.hpp"
#include "stegomark/util.hpp"

namespace stegomark {

// Single-threaded token-by-token generation state: prompt tokens plus
// generated tokens, the incrementally maintained decoded text, and the
// current round-trip consistency flag. Construction requires the prompt to be
// a fixed point of encode(decode(.)), which encode() output always is.
class GenerationSession {
 public:
  GenerationSession(const Tokenizer& tk, const LanguageModel& lm,
                    std::string_view prompt_text, uint64_t seed,
                    bool track_consistency = true);

  const Tokenizer& tokenizer() const { return *tk_; }
  const LanguageModel& lm() const { return *lm_; }
  Rng& rng() { return rng_; }

  const std::vector<int>& history() const { return ids_; }
  const std::vector<Span>& spans() const { return spans_; }
  size_t prompt_tokens() const { return prompt_tokens_; }
  size_t generated_tokens() const { return ids_.size() - prompt_tokens_; }
  // Raw rendered text; fragment leads not yet normalized.
  std::string_view text() const { return text_; }
  // decode(history): what the receiver of the text actually sees.
  std::string decoded_text() const { return tk_->fragment_fixup(text_); }
  std::string continuation() const {
    return tk_->fragment_fixup(text_).substr(prompt_chars_);
  }
  std::vector<int> generated_ids() const {
    return std::vector<int>(ids_.begin() + long(prompt_tokens_), ids_.end());
  }

  LmDistribution next_distribution() const {
    return lm_->next_distribution(ids_);
  }

  // Candidate-level check against the current history. Uses the windowed
  // re-encode while the history is consistent, the full re-encode otherwise.
  bool candidate_breaks_consistency(int id) const;

  void append(int id);
  // Keeps the first `keep_generated` generated tokens.
  void truncate_generated(size_t keep_generated);

  // Meaningful only when consistency tracking is on.
  bool currently_consistent() const { return consistent_; }
  bool tracking_consistency() const { return track_; }

 private:
  const Tokenizer* tk_;
  const LanguageModel* lm_;
  std::vector<int> ids_;
  std::vector<Span> spans_;
  std::string text_;
  size_t prompt_tokens_ = 0;
  size_t prompt_chars_ = 0;
  bool consistent_ = true;
  bool track_ = true;
  Rng rng_;

  bool full_roundtrip_consistent() const;
};

}  // namespace stegomark
