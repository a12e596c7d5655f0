#include <doctest.h>

#include <cmath>

#include "stegomark/attack.hpp"
#include "stegomark/session.hpp"
#include "stegomark/fixtures.hpp"

using namespace stegomark;

TEST_CASE("epsilon zero leaves the text untouched") {
  Tokenizer tk = fixtures::plain_tokenizer();
  HashLm lm = fixtures::fixture_hash(tk);
  std::string text = " the cat and the dog worked";
  AttackResult r = replacement_attack({0.0, 123}, lm, tk, text);
  CHECK(r.text == text);
  CHECK(r.selected == 0);
}

TEST_CASE("epsilon one selects every position") {
  Tokenizer tk = fixtures::plain_tokenizer();
  HashLm lm = fixtures::fixture_hash(tk);
  std::string text = " the cat and the dog";
  size_t tokens = tk.encode(text).size();
  AttackResult r = replacement_attack({1.0, 123}, lm, tk, text);
  CHECK(r.selected == tokens);
}

TEST_CASE("selection counts follow the binomial distribution") {
  Tokenizer tk = fixtures::plain_tokenizer();
  HashLm lm = fixtures::fixture_hash(tk);
  // build a 200-token text
  GenerationSession session(tk, lm, " the", 5);
  for (int t = 0; t < 200; ++t)
    session.append(
        multinomial_sample(session.next_distribution(), session.rng()));
  std::string text = session.continuation();
  size_t n_tokens = tk.encode(text).size();

  const double eps = 0.2;
  const int runs = 1000;
  double total = 0.0;
  for (int i = 0; i < runs; ++i)
    total += double(
        replacement_attack({eps, uint64_t(9000 + i)}, lm, tk, text).selected);
  double mean_selected = total / runs;
  double expect = eps * double(n_tokens);
  double sigma = std::sqrt(double(n_tokens) * eps * (1 - eps) / runs);
  CHECK(std::abs(mean_selected - expect) < 3 * sigma);
}

TEST_CASE("attack is deterministic per seed") {
  Tokenizer tk = fixtures::plain_tokenizer();
  HashLm lm = fixtures::fixture_hash(tk);
  std::string text = " the cat and the dog worked and played";
  AttackResult a = replacement_attack({0.5, 77}, lm, tk, text);
  AttackResult b = replacement_attack({0.5, 77}, lm, tk, text);
  CHECK(a.text == b.text);
  CHECK(a.selected == b.selected);
}
