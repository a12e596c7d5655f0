#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stegomark/tokenizer.hpp"
#include "stegomark/util.hpp"

namespace stegomark {

struct LmDistribution {
  std::vector<double> probs;   // normalized, sums to 1 within 1e-9
  std::vector<double> logits;  // pre-softmax scores (natural log scale)
  int step_index = 0;
};

struct SamplingConfig {
  int top_k = 64;
  double temperature = 1.0;
  uint64_t seed = 0;
};

struct PoolItem {
  int id = 0;
  double prob = 0.0;
};

// Renormalized top-k slice of a distribution, ordered (prob desc, id asc).
struct CandidatePool {
  std::vector<PoolItem> entries;
  size_t size() const { return entries.size(); }
};

class LanguageModel {
 public:
  virtual ~LanguageModel() = default;
  virtual int vocab_size() const = 0;
  virtual LmDistribution next_distribution(std::span<const int> history) const = 0;
};

// --- n-gram model ---------------------------------------------------------
//
// Add-alpha smoothed counts per context length 0..n-1. An unseen context
// backs off to the next shorter one; the empty context always exists.
class NGramLm final : public LanguageModel {
 public:
  static NGramLm train(std::span<const int> tokens, int vocab_size, int n,
                       double alpha);
  // Encodes each corpus line independently and concatenates the counts.
  static NGramLm train_text(const Tokenizer& tk, std::string_view corpus,
                            int n, double alpha);

  int vocab_size() const override { return vocab_size_; }
  int order() const { return n_; }
  double alpha() const { return alpha_; }
  LmDistribution next_distribution(std::span<const int> history) const override;

  void save(const std::filesystem::path& path) const;
  static NGramLm load(const std::filesystem::path& path);
  std::string to_json_string() const;
  static NGramLm from_json_string(std::string_view text);

  bool operator==(const NGramLm& other) const;

 private:
  struct ContextCounts {
    uint64_t total = 0;
    std::map<int, uint64_t> counts;
    bool operator==(const ContextCounts&) const = default;
  };
  int vocab_size_ = 0;
  int n_ = 1;
  double alpha_ = 1.0;
  // orders_[k]: counts keyed by the packed k-token context.
  std::vector<std::map<std::vector<int>, ContextCounts>> orders_;
};

// --- hash model -------------------------------------------------------------
//
// Logits are `concentration` times keyed-hash uniforms of (key, last
// `context` ids). concentration 0 gives the exactly uniform distribution;
// larger values lower the entropy monotonically.
class HashLm final : public LanguageModel {
 public:
  HashLm(int vocab_size, int context, std::string key, double concentration);

  int vocab_size() const override { return vocab_size_; }
  LmDistribution next_distribution(std::span<const int> history) const override;

  void save(const std::filesystem::path& path) const;
  static HashLm load(const std::filesystem::path& path);

 private:
  int vocab_size_;
  int context_;
  std::string key_;
  double concentration_;
};

// Loads any model file by its "kind" field ("ngram", "hash", or "remote").
std::unique_ptr<LanguageModel> load_model(const std::filesystem::path& path);

// --- distribution operations ---------------------------------------------------

// Top-k selection with (prob desc, id asc) ordering and renormalization.
// temperature != 1 rescales logits before selection.
CandidatePool top_k_pool(const LmDistribution& dist, const SamplingConfig& cfg);

// Inverse-CDF sampling over id-ascending cumulative order.
int multinomial_sample(const LmDistribution& dist, Rng& rng);
int sample_from_pool(const CandidatePool& pool, Rng& rng);

double entropy_bits(const LmDistribution& dist);

struct PerplexityResult {
  double ppl = 0.0;
  size_t tokens = 0;
  std::optional<size_t> zero_prob_position;  // set when ppl is infinite
};

// exp(-(1/N) sum ln P(s_i | s_<i)) over encode(prompt + text); N counts only
// the tokens of `text`. With condition_on_prompt false the prompt tokens are
// scored as well.
PerplexityResult perplexity(const LanguageModel& lm, const Tokenizer& tk,
                            std::string_view text, std::string_view prompt = {},
                            bool condition_on_prompt = true);

}  // namespace stegomark
