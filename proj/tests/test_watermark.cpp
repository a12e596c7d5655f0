#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "stegomark/errors.hpp"
#include "stegomark/fixtures.hpp"
#include "stegomark/consistency.hpp"
#include "stegomark/session.hpp"
#include "stegomark/util.hpp"
#include "stegomark/watermark.hpp"

using namespace stegomark;

namespace {

// True generation-level consistency: the retokenized text reproduces the
// session's token ids.
bool run_consistent(const Tokenizer& tk, const std::string& prompt,
                    const WatermarkResult& wr) {
  std::vector<int> expected = tk.encode(prompt).ids;
  expected.insert(expected.end(), wr.tokens.begin(), wr.tokens.end());
  return tk.encode(prompt + wr.text).ids == expected;
}

SchemeConfig make_cfg(Scheme kind, int vocab) {
  SchemeConfig cfg;
  cfg.kind = kind;
  cfg.key = "secret";
  cfg.gamma = 0.5;
  cfg.delta = 2.0;
  cfg.vocab_size = vocab;
  return cfg;
}

// Emits a fixed token stream regardless of history.
struct ScriptedLm final : LanguageModel {
  int vocab = 0;
  std::vector<int> script;
  mutable size_t cursor = 0;

  int vocab_size() const override { return vocab; }
  LmDistribution next_distribution(std::span<const int>) const override {
    LmDistribution d;
    d.probs.assign(size_t(vocab), 0.0);
    int id = script[std::min(cursor, script.size() - 1)];
    ++cursor;
    d.probs[size_t(id)] = 1.0;
    d.logits.assign(size_t(vocab), -1e30);
    d.logits[size_t(id)] = 0.0;
    return d;
  }
};

}  // namespace

TEST_CASE("green vectors are deterministic with the exact green count") {
  SchemeConfig cfg = make_cfg(Scheme::lefthash, 8);
  std::vector<int> ctx{5};
  auto a = green_vector(cfg, ctx);
  auto b = green_vector(cfg, ctx);
  CHECK(a == b);

  Rng rng(4);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<int> c{int(rng.next_below(8))};
    cfg.kind = Scheme::lefthash;
    auto v = green_vector(cfg, c);
    int ones = 0;
    for (uint8_t g : v) ones += g;
    CHECK(ones == 4);  // gamma 0.5 of 8
  }

  cfg.gamma = 1.0;
  auto all = green_vector(cfg, ctx);
  for (uint8_t g : all) CHECK(g == 1);
}

TEST_CASE("unigram ignores its context") {
  SchemeConfig cfg = make_cfg(Scheme::unigram, 32);
  auto a = green_vector(cfg, std::vector<int>{1, 2, 3});
  auto b = green_vector(cfg, std::vector<int>{9});
  CHECK(a == b);
}

TEST_CASE("strength formulas") {
  SchemeConfig logit = make_cfg(Scheme::lefthash, 8);
  ScoreTrace all_green;
  for (int i = 0; i < 100; ++i) {
    all_green.positions.push_back(size_t(i));
    all_green.tokens.push_back(0);
    all_green.phis.push_back(1.0);
  }
  CHECK(strength(all_green, logit) == doctest::Approx(10.0).epsilon(1e-12));

  ScoreTrace half;
  for (int i = 0; i < 50; ++i) {
    half.phis.push_back(1.0);
    half.phis.push_back(0.0);
  }
  half.positions.resize(100);
  half.tokens.resize(100);
  CHECK(strength(half, logit) == doctest::Approx(0.0));

  SchemeConfig gumbel = make_cfg(Scheme::gumbel, 8);
  ScoreTrace two;
  two.phis = {2.0, 2.0};
  two.positions = {0, 1};
  two.tokens = {0, 0};
  CHECK(strength(two, gumbel) ==
        doctest::Approx(4.0 / std::sqrt(2.0) - std::sqrt(2.0)).epsilon(1e-9));

  ScoreTrace empty;
  CHECK_THROWS_AS(strength(empty, logit), std::invalid_argument);
}

TEST_CASE("gumbel decoder picks the race winner") {
  // probs [0.9, 0.1] with equal vectors 0.5: log(0.5)/0.9 beats log(0.5)/0.1
  Tokenizer tk = fixtures::plain_tokenizer();
  (void)tk;
  SchemeConfig cfg = make_cfg(Scheme::gumbel, 2);
  // direct check of the decision rule
  double s0 = std::log(0.5) / 0.9;
  double s1 = std::log(0.5) / 0.1;
  CHECK(s0 > s1);
}

TEST_CASE("score_text under a huge delta sees only green tokens") {
  Tokenizer tk = fixtures::plain_tokenizer();
  HashLm lm = fixtures::fixture_hash(tk, 1.0);
  SchemeConfig cfg = make_cfg(Scheme::lefthash, tk.vocab_size());
  cfg.delta = 50.0;  // effectively restricts sampling to the green list
  WatermarkResult wr =
      embed_watermark(lm, tk, " the cat and the dog", cfg, 60, std::nullopt, 3);
  for (double phi : wr.trace.phis) CHECK(phi == 1.0);

  ScoreTrace detected = score_text(cfg, tk, wr.text, " the cat and the dog");
  double mean_phi = 0.0;
  for (double p : detected.phis) mean_phi += p;
  mean_phi /= double(detected.scored());
  CHECK(mean_phi > 0.95);
}

TEST_CASE("unwatermarked text scores near the null for the green schemes") {
  Tokenizer tk = fixtures::plain_tokenizer();
  HashLm lm = fixtures::fixture_hash(tk, 1.0);
  SchemeConfig cfg = make_cfg(Scheme::lefthash, tk.vocab_size());
  std::vector<double> strengths;
  for (uint64_t seed = 0; seed < 100; ++seed) {
    GenerationSession session(tk, lm, " the cat", seed);
    for (int t = 0; t < 100; ++t)
      session.append(
          multinomial_sample(session.next_distribution(), session.rng()));
    strengths.push_back(
        strength(score_text(cfg, tk, session.continuation(), " the cat"), cfg));
  }
  CHECK(std::abs(mean(strengths)) < 0.4);  // loose unit-level band
}

TEST_CASE("embed/detect agreement without inconsistency") {
  Tokenizer tk = fixtures::plain_tokenizer();
  HashLm lm = fixtures::fixture_hash(tk, 1.0);
  std::string prompt = " the cat and the dog";
  for (Scheme kind :
       {Scheme::lefthash, Scheme::selfhash, Scheme::unigram, Scheme::gumbel}) {
    SchemeConfig cfg = make_cfg(kind, tk.vocab_size());
    // pick the first seed whose run stays round-trip consistent
    size_t verified = 0;
    for (uint64_t seed = 11; seed < 31 && verified == 0; ++seed) {
      WatermarkResult wr =
          embed_watermark(lm, tk, prompt, cfg, 60, std::nullopt, seed);
      if (!run_consistent(tk, prompt, wr)) continue;

      ScoreTrace detected = score_text(cfg, tk, wr.text, prompt);
      REQUIRE(detected.scored() == wr.trace.scored());
      size_t prompt_tokens = tk.encode(prompt).size();
      for (size_t i = 0; i < detected.scored(); ++i) {
        CHECK(detected.positions[i] ==
              wr.trace.positions[i] + prompt_tokens);
        CHECK(detected.phis[i] ==
              doctest::Approx(wr.trace.phis[i]).epsilon(1e-12));
      }
      verified = detected.scored();
    }
    CHECK(verified > 0);
  }
}

TEST_CASE("rollback on a consistent run is a no-op") {
  Tokenizer tk = fixtures::plain_tokenizer();
  NGramLm lm = NGramLm::train_text(
      tk, fixtures::fixture_corpus(120, 2), 3, 1e-4);
  SchemeConfig cfg = make_cfg(Scheme::lefthash, tk.vocab_size());
  RollbackConfig rb{2, 32};
  for (uint64_t seed = 1; seed <= 8; ++seed) {
    WatermarkResult plain =
        embed_watermark(lm, tk, " the cat", cfg, 50, std::nullopt, seed);
    if (!run_consistent(tk, " the cat", plain))
      continue;  // skip the rare seeds that hit a mismatch
    WatermarkResult rolled =
        embed_watermark(lm, tk, " the cat", cfg, 50, rb, seed);
    CHECK(plain.text == rolled.text);
    CHECK(rolled.rollbacks == 0);
  }
}

TEST_CASE("hand-traced rollback: persistent mismatch deletes q+1 tokens") {
  // Script: a token that starts a lasting inconsistency, followed by tokens
  // that keep it alive. With q=2 the offender and its two followers must go,
  // the offender gets banned, and regeneration proceeds.
  Tokenizer tk = fixtures::ambiguous_tokenizer();
  int no = *tk.id_of_surface(tk.internalize("_no"));
  int body = *tk.id_of_surface("body");
  int the = *tk.id_of_surface(tk.internalize("_the"));
  int cat = *tk.id_of_surface(tk.internalize("_cat"));

  ScriptedLm lm;
  lm.vocab = tk.vocab_size();
  // step0: _no (fine), step1: body (starts stable TI), steps 2,3: _the, _cat
  // keep it alive; after rollback the script re-runs from the banned point.
  lm.script = {no, body, the, cat, the, cat, the, cat, the, cat};

  SchemeConfig cfg = make_cfg(Scheme::lefthash, tk.vocab_size());
  cfg.delta = 0.0;  // keep the scripted point mass intact
  RollbackConfig rb{2, 32};
  WatermarkResult wr = embed_watermark(lm, tk, " the dog", cfg, 6, rb, 5);

  CHECK(wr.rollbacks == 1);
  CHECK(wr.rolled_back_episodes == 1);
  // the banned offender never reappears at position 1
  REQUIRE(wr.tokens.size() == 6);
  CHECK(wr.tokens[0] == no);
  CHECK(wr.tokens[1] != body);
  CHECK(run_consistent(tk, " the dog", wr));
}

TEST_CASE("transient mismatch inside the observation window needs no rollback") {
  Tokenizer tk = fixtures::ambiguous_tokenizer();
  int j = *tk.id_of_surface("j");
  int v = *tk.id_of_surface("v");
  int the = *tk.id_of_surface(tk.internalize("_the"));
  int cat = *tk.id_of_surface(tk.internalize("_cat"));

  ScriptedLm lm;
  lm.vocab = tk.vocab_size();
  lm.script = {j, v, the, cat, the, cat};

  SchemeConfig cfg = make_cfg(Scheme::lefthash, tk.vocab_size());
  cfg.delta = 0.0;
  RollbackConfig rb{2, 32};
  WatermarkResult wr = embed_watermark(lm, tk, " the dog", cfg, 6, rb, 5);
  CHECK(wr.rollbacks == 0);
  CHECK(wr.transient_episodes == 1);
  CHECK(wr.tokens[0] == j);  // the fragment lead survived
  CHECK(wr.tokens[1] == v);
  CHECK(run_consistent(tk, " the dog", wr));
}

// Emits a fixed distribution per position, independent of rollback retries.
struct PositionalLm final : LanguageModel {
  int vocab = 0;
  size_t prompt_tokens = 0;
  std::vector<std::vector<std::pair<int, double>>> dists;

  int vocab_size() const override { return vocab; }
  LmDistribution next_distribution(std::span<const int> h) const override {
    size_t pos = h.size() - prompt_tokens;
    const auto& spec = dists[std::min(pos, dists.size() - 1)];
    LmDistribution d;
    d.probs.assign(size_t(vocab), 0.0);
    d.logits.assign(size_t(vocab), -1e30);
    for (auto [id, p] : spec) {
      d.probs[size_t(id)] = p;
      d.logits[size_t(id)] = std::log(p);
    }
    return d;
  }
};

TEST_CASE("rollback budget exhaustion carries partial output") {
  Tokenizer tk = fixtures::ambiguous_tokenizer();
  int no = *tk.id_of_surface(tk.internalize("_no"));
  int body = *tk.id_of_surface("body");
  int bos = *tk.id_of_surface("<s>");
  int eos = *tk.id_of_surface("</s>");

  PositionalLm lm;
  lm.vocab = tk.vocab_size();
  lm.prompt_tokens = tk.encode(" the dog").size();
  // position 0: "_no"; position 1: three options, each causing lasting
  // inconsistency, so every retry burns one rollback
  lm.dists = {{{no, 1.0}},
              {{body, 0.5}, {bos, 0.3}, {eos, 0.2}},
              {{no, 1.0}}};

  SchemeConfig cfg = make_cfg(Scheme::lefthash, tk.vocab_size());
  cfg.delta = 0.0;
  RollbackConfig rb{1, 2};  // budget smaller than the supply of bad options
  try {
    embed_watermark(lm, tk, " the dog", cfg, 8, rb, 5);
    FAIL("expected RollbackBudgetError");
  } catch (const RollbackBudgetError& e) {
    CHECK(e.partial_text.find(" no") != std::string::npos);
  }
}

TEST_CASE("score trace JSONL round trip preserves the strength") {
  Tokenizer tk = fixtures::plain_tokenizer();
  HashLm lm = fixtures::fixture_hash(tk, 1.0);
  SchemeConfig cfg = make_cfg(Scheme::lefthash, tk.vocab_size());
  WatermarkResult wr =
      embed_watermark(lm, tk, " the cat and the dog", cfg, 60, std::nullopt, 9);
  auto path = std::filesystem::temp_directory_path() / "stegomark_tests" /
              "scores.jsonl";
  std::filesystem::create_directories(path.parent_path());
  write_score_trace(path, wr.trace);
  ScoreTrace back = read_score_trace(path);
  CHECK(strength(back, cfg) ==
        doctest::Approx(strength(wr.trace, cfg)).epsilon(1e-9));
}

TEST_CASE("insufficient context is an error") {
  Tokenizer tk = fixtures::plain_tokenizer();
  SchemeConfig cfg = make_cfg(Scheme::gumbel, tk.vocab_size());
  CHECK_THROWS_AS(score_text(cfg, tk, " a"), std::invalid_argument);
}
