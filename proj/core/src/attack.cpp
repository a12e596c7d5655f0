#include "stegomark/attack.hpp"

#include <stdexcept>

#include "stegomark/util.hpp"

namespace stegomark {

AttackResult replacement_attack(const AttackConfig& cfg,
                                const LanguageModel& lm, const Tokenizer& tk,
                                std::string_view text,
                                std::string_view prompt) {
  if (cfg.epsilon < 0.0 || cfg.epsilon > 1.0)
    throw std::invalid_argument("epsilon must lie in [0, 1]");
  Rng rng(cfg.seed);

  std::vector<int> full = tk.encode(prompt).ids;
  size_t ctx_len = full.size();
  TokenSequence seq = tk.encode(text);
  full.insert(full.end(), seq.ids.begin(), seq.ids.end());

  AttackResult result;
  for (size_t i = ctx_len; i < full.size(); ++i) {
    if (rng.next_double() < cfg.epsilon) {
      ++result.selected;
      LmDistribution dist =
          lm.next_distribution(std::span<const int>(full.data(), i));
      full[i] = multinomial_sample(dist, rng);
    }
  }
  result.text = tk.decode(std::span<const int>(full).subspan(ctx_len));
  return result;
}

}  // namespace stegomark
