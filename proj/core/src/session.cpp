#include "stegomark/session.hpp"

#include <stdexcept>

#include "stegomark/errors.hpp"

namespace stegomark {

GenerationSession::GenerationSession(const Tokenizer& tk,
                                     const LanguageModel& lm,
                                     std::string_view prompt_text,
                                     uint64_t seed, bool track_consistency)
    : tk_(&tk), lm_(&lm), track_(track_consistency), rng_(seed) {
  TokenSequence prompt = tk.encode(prompt_text);
  ids_ = prompt.ids;
  spans_ = prompt.spans;
  text_ = std::string(prompt_text);
  prompt_tokens_ = ids_.size();
  prompt_chars_ = text_.size();
  if (lm.vocab_size() != tk.vocab_size())
    throw std::invalid_argument("model and tokenizer vocabulary sizes differ");
}

bool GenerationSession::candidate_breaks_consistency(int id) const {
  if (consistent_)
    return is_candidate_level_it_windowed(*tk_, text_, ids_, spans_, id);
  return is_candidate_level_it(*tk_, ids_, id);
}

void GenerationSession::append(int id) {
  if (!tk_->valid_id(id))
    throw std::invalid_argument("append: unknown token id");
  bool breaks = track_ ? candidate_breaks_consistency(id) : false;
  if (tk_->is_special(id)) {
    spans_.push_back({text_.size(), text_.size()});
  } else {
    std::string rendered = tk_->render(id);
    spans_.push_back({text_.size(), text_.size() + rendered.size()});
    text_ += rendered;
  }
  ids_.push_back(id);
  consistent_ = !breaks;
}

void GenerationSession::truncate_generated(size_t keep_generated) {
  size_t keep = prompt_tokens_ + keep_generated;
  if (keep > ids_.size())
    throw std::invalid_argument("truncate_generated: nothing to restore");
  if (keep == ids_.size()) return;
  size_t new_len = keep == 0 ? 0 : spans_[keep - 1].end;
  ids_.resize(keep);
  spans_.resize(keep);
  text_.resize(new_len);
  consistent_ = full_roundtrip_consistent();
}

bool GenerationSession::full_roundtrip_consistent() const {
  TokenSequence retok = tk_->encode(text_);
  return retok.ids == ids_;
}

}  // namespace stegomark
