#pragma once

#include <string>
#include <string_view>

#include "stegomark/lm.hpp"
#include "stegomark/tokenizer.hpp"

namespace stegomark {

struct AttackConfig {
  double epsilon = 0.2;  // per-token selection probability
  uint64_t seed = 0;
};

struct AttackResult {
  std::string text;
  size_t selected = 0;  // positions that were resampled (possibly unchanged)
};

// Token-replacement attack: each position is independently selected with
// probability epsilon and resampled from the model's distribution over the
// already-mutated left context (sequential scan). `prompt` only conditions
// the model; the output text does not include it.
AttackResult replacement_attack(const AttackConfig& cfg,
                                const LanguageModel& lm, const Tokenizer& tk,
                                std::string_view text,
                                std::string_view prompt = {});

}  // namespace stegomark
