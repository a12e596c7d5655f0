#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "stegomark/errors.hpp"
#include "stegomark/fixtures.hpp"
#include "stegomark/lm.hpp"

using namespace stegomark;

namespace {

LmDistribution make_dist(std::vector<double> probs) {
  LmDistribution d;
  d.probs = std::move(probs);
  d.logits.resize(d.probs.size());
  for (size_t i = 0; i < d.probs.size(); ++i)
    d.logits[i] = d.probs[i] > 0 ? std::log(d.probs[i]) : -1e30;
  return d;
}

}  // namespace

TEST_CASE("hash model at zero concentration is exactly uniform") {
  HashLm lm(16, 2, "k", 0.0);
  LmDistribution d = lm.next_distribution(std::vector<int>{1, 2, 3});
  for (double p : d.probs) CHECK(p == doctest::Approx(1.0 / 16).epsilon(1e-12));
}

TEST_CASE("hash model is deterministic and context sensitive") {
  HashLm lm(32, 2, "k", 2.0);
  auto a = lm.next_distribution(std::vector<int>{1, 2});
  auto b = lm.next_distribution(std::vector<int>{1, 2});
  auto c = lm.next_distribution(std::vector<int>{1, 3});
  CHECK(a.probs == b.probs);
  CHECK(a.probs != c.probs);
  // only the last `context` ids matter
  auto d = lm.next_distribution(std::vector<int>{9, 1, 2});
  CHECK(a.probs == d.probs);
}

TEST_CASE("hash model entropy decreases in the concentration knob") {
  std::vector<double> knobs{0.0, 1.0, 2.0, 4.0, 8.0};
  std::vector<double> entropies;
  for (double c : knobs) {
    HashLm lm(64, 2, "k", c);
    double total = 0.0;
    for (int ctx = 0; ctx < 200; ++ctx)
      total += entropy_bits(lm.next_distribution(std::vector<int>{ctx, 7}));
    entropies.push_back(total / 200.0);
  }
  for (size_t i = 0; i + 1 < entropies.size(); ++i)
    CHECK(entropies[i] > entropies[i + 1]);
}

TEST_CASE("ngram model prefers the continuation it saw") {
  // vocab capped at the alphabet: char-level tokens, no merges
  Tokenizer tk = Tokenizer::train("ababababab", 3, {});
  int a = *tk.id_of_surface("a");
  int b = *tk.id_of_surface("b");
  REQUIRE(tk.merges().empty());
  NGramLm lm = NGramLm::train_text(tk, "ababababab", 2, 0.1);
  LmDistribution d = lm.next_distribution(std::vector<int>{a});
  int argmax = int(std::max_element(d.probs.begin(), d.probs.end()) -
                   d.probs.begin());
  CHECK(argmax == b);

  auto again = lm.next_distribution(std::vector<int>{a});
  CHECK(d.probs == again.probs);
}

TEST_CASE("unigram counts give probs proportional to f + alpha") {
  std::vector<int> tokens{0, 0, 0, 1, 1, 2};
  NGramLm lm = NGramLm::train(tokens, 4, 1, 0.5);
  LmDistribution d = lm.next_distribution(std::vector<int>{});
  double denom = 6.0 + 0.5 * 4;
  CHECK(d.probs[0] == doctest::Approx((3 + 0.5) / denom));
  CHECK(d.probs[1] == doctest::Approx((2 + 0.5) / denom));
  CHECK(d.probs[2] == doctest::Approx((1 + 0.5) / denom));
  CHECK(d.probs[3] == doctest::Approx(0.5 / denom));
}

TEST_CASE("unseen context backs off to shorter orders") {
  std::vector<int> tokens{0, 1, 0, 1, 0, 1};
  NGramLm lm = NGramLm::train(tokens, 3, 3, 0.5);
  // context (2,2) was never seen: falls back to unigram-ish shape
  LmDistribution d = lm.next_distribution(std::vector<int>{2, 2});
  LmDistribution uni = lm.next_distribution(std::vector<int>{});
  CHECK(d.probs == uni.probs);
}

TEST_CASE("ngram save/load round trip preserves distributions") {
  Tokenizer tk = fixtures::ambiguous_tokenizer();
  NGramLm lm = fixtures::fixture_ngram(tk, 3, 0.05);
  auto path = std::filesystem::temp_directory_path() / "stegomark_tests" /
              "ngram.json";
  std::filesystem::create_directories(path.parent_path());
  lm.save(path);
  NGramLm back = NGramLm::load(path);
  CHECK(back == lm);
  std::vector<int> ctx = tk.encode(" the cat").ids;
  CHECK(lm.next_distribution(ctx).probs == back.next_distribution(ctx).probs);
}

TEST_CASE("top_k_pool selects, renormalizes, and breaks ties by id") {
  LmDistribution d = make_dist({0.4, 0.3, 0.2, 0.1});
  SamplingConfig cfg;
  cfg.top_k = 2;
  CandidatePool pool = top_k_pool(d, cfg);
  REQUIRE(pool.size() == 2);
  CHECK(pool.entries[0].id == 0);
  CHECK(pool.entries[0].prob == doctest::Approx(0.4 / 0.7));
  CHECK(pool.entries[1].id == 1);
  CHECK(pool.entries[1].prob == doctest::Approx(0.3 / 0.7));

  cfg.top_k = 4;
  CandidatePool all = top_k_pool(d, cfg);
  for (size_t i = 0; i < 4; ++i)
    CHECK(all.entries[i].prob == doctest::Approx(d.probs[all.entries[i].id]));

  LmDistribution uniform = make_dist({0.25, 0.25, 0.25, 0.25});
  cfg.top_k = 1;
  CHECK(top_k_pool(uniform, cfg).entries[0].id == 0);
}

TEST_CASE("distributions are normalized") {
  Tokenizer tk = fixtures::ambiguous_tokenizer();
  NGramLm ngram = fixtures::fixture_ngram(tk);
  HashLm hash = fixtures::fixture_hash(tk, 2.0);
  std::vector<int> ctx = tk.encode(" the cat").ids;
  for (const LanguageModel* lm :
       {static_cast<const LanguageModel*>(&ngram),
        static_cast<const LanguageModel*>(&hash)}) {
    LmDistribution d = lm->next_distribution(ctx);
    double sum = 0;
    for (double p : d.probs) {
      CHECK(p >= 0.0);
      sum += p;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("temperature rescales the pool") {
  LmDistribution d = make_dist({0.64, 0.16, 0.16, 0.04});
  SamplingConfig cfg;
  cfg.top_k = 4;
  cfg.temperature = 2.0;  // probabilities flatten toward their square roots
  CandidatePool pool = top_k_pool(d, cfg);
  double expect0 = 0.8 / (0.8 + 0.4 + 0.4 + 0.2);
  CHECK(pool.entries[0].prob == doctest::Approx(expect0).epsilon(1e-9));
  double sum = 0;
  for (const auto& e : pool.entries) sum += e.prob;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("multinomial sampling") {
  LmDistribution point = make_dist({0, 0, 0, 0, 0, 0, 0, 1.0});
  Rng r1(123);
  CHECK(multinomial_sample(point, r1) == 7);

  LmDistribution d = make_dist({0.5, 0.3, 0.2});
  Rng a(9), b(9);
  for (int i = 0; i < 50; ++i)
    CHECK(multinomial_sample(d, a) == multinomial_sample(d, b));

  // frequency oracle: 1e5 draws within 3 sigma binomial bounds
  Rng rng(2024);
  std::vector<int> counts(3, 0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) ++counts[size_t(multinomial_sample(d, rng))];
  for (size_t i = 0; i < 3; ++i) {
    double expect = d.probs[i] * n;
    double sigma = std::sqrt(n * d.probs[i] * (1 - d.probs[i]));
    CHECK(std::abs(counts[i] - expect) < 3 * sigma);
  }
}

TEST_CASE("perplexity of the uniform model is the vocabulary size") {
  Tokenizer tk = fixtures::plain_tokenizer();
  HashLm lm(tk.vocab_size(), 2, "k", 0.0);
  PerplexityResult r = perplexity(lm, tk, " the cat and the dog");
  CHECK(r.ppl == doctest::Approx(double(tk.vocab_size())).epsilon(1e-9));
}

TEST_CASE("perplexity closed form") {
  // Two tokens with probabilities 0.5 and 0.125: exp(mean nll) = 4.
  Tokenizer::Builder b;
  b.bases("_xyz");
  Tokenizer tk = std::move(b).build();
  REQUIRE(*tk.id_of_surface("x") == 1);  // "xx" -> two tokens of id 1
  struct Scripted final : LanguageModel {
    int vocab_size() const override { return 4; }
    LmDistribution next_distribution(std::span<const int> h) const override {
      LmDistribution d;
      if (h.empty())
        d.probs = {0.3, 0.5, 0.1, 0.1};
      else
        d.probs = {0.375, 0.125, 0.25, 0.25};
      d.logits.resize(4);
      for (size_t i = 0; i < 4; ++i) d.logits[i] = std::log(d.probs[i]);
      return d;
    }
  } lm;
  PerplexityResult r = perplexity(lm, tk, "xx");
  CHECK(r.ppl == doctest::Approx(4.0).epsilon(1e-9));
}

TEST_CASE("perplexity reports a zero-probability position") {
  struct Zero final : LanguageModel {
    int vocab_size() const override { return 4; }
    LmDistribution next_distribution(std::span<const int> h) const override {
      LmDistribution d;
      d.probs = h.empty() ? std::vector<double>{1, 0, 0, 0}
                          : std::vector<double>{0, 1, 0, 0};
      d.logits.assign(4, 0.0);
      return d;
    }
  } lm;
  Tokenizer::Builder b;
  b.bases("_xy");
  Tokenizer tk = std::move(b).build();
  REQUIRE(*tk.id_of_surface("x") == 1);
  PerplexityResult r = perplexity(lm, tk, "xx");
  CHECK(std::isinf(r.ppl));
  REQUIRE(r.zero_prob_position.has_value());
  CHECK(*r.zero_prob_position == 0);
}

TEST_CASE("retokenization inflates perplexity when the lists disagree") {
  // A dangling fragment lead renders as the replacement byte, so the
  // receiver retokenizes tokens the model finds far less likely than the
  // generated list.
  Tokenizer tk = fixtures::ambiguous_tokenizer();
  NGramLm lm = fixtures::fixture_ngram(tk);

  std::vector<int> generated = {*tk.id_of_surface(tk.internalize("_the")),
                                *tk.id_of_surface(tk.internalize("_j"))};
  std::string text = tk.decode(generated);
  REQUIRE(text == " the q");  // the lead never got its tail
  double gen_nll = 0.0;
  for (size_t i = 0; i < generated.size(); ++i) {
    auto d = lm.next_distribution(std::span<const int>(generated.data(), i));
    gen_nll -= std::log(d.probs[size_t(generated[i])]);
  }
  double gen_ppl = std::exp(gen_nll / double(generated.size()));

  REQUIRE(tk.encode(text).ids != generated);  // the lists really disagree
  PerplexityResult retok = perplexity(lm, tk, text);
  CHECK(retok.ppl > 2.0 * gen_ppl);
}
