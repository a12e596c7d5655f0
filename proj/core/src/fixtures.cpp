#include "stegomark/fixtures.hpp"

#include <algorithm>
#include <sstream>

#include "stegomark/util.hpp"

namespace stegomark::fixtures {

namespace {

// Shared word families. Marker merges come first so the "_x" chains win over
// mid-word pairs like (i,n).
void add_marker_chains(Tokenizer::Builder& b) {
  b.merge("_", "j");  // _j (fragment words attach to the word start)
  b.merge("_", "x");  // _x
  b.merge("_", "n");  // _n
  b.merge("_n", "o");  // _no
  b.merge("_", "o");   // _o
  b.merge("_o", "u");  // _ou
  b.merge("_ou", "t"); // _out
  b.merge("_", "i");   // _i
  b.merge("_i", "n");  // _in
  b.merge("_", "s");   // _s
  b.merge("_s", "o");  // _so
  b.merge("_so", "m"); // _som
  b.merge("_som", "e"); // _some
  b.merge("_", "w");   // _w
  b.merge("_w", "o");  // _wo
  b.merge("_wo", "r"); // _wor
  b.merge("_wor", "k"); // _work
  b.merge("_", "t");   // _t
  b.merge("_t", "h");  // _th
  b.merge("_th", "e"); // _the
  b.merge("_", "a");   // _a
  b.merge("_a", "n");  // _an
  b.merge("_an", "d"); // _and
  b.merge("_", "c");   // _c
  b.merge("_c", "a");  // _ca
  b.merge("_ca", "t"); // _cat
  b.merge("_", "d");   // _d
  b.merge("_d", "o");  // _do
  b.merge("_do", "g"); // _dog
  b.merge("_", "p");   // _p
  b.merge("_p", "l");  // _pl
  b.merge("_pl", "a"); // _pla
  b.merge("_pla", "y"); // _play
  b.merge("_", "b");   // _b
  b.merge("_b", "o");  // _bo
  b.merge("_bo", "d"); // _bod
  b.merge("_bod", "y"); // _body
}

void add_completion_chains(Tokenizer::Builder& b) {
  b.merge("b", "o");    // bo
  b.merge("bo", "d");   // bod
  b.merge("bod", "y");  // body
  b.merge("p", "u");    // pu
  b.merge("pu", "t");   // put
  b.merge("t", "o");    // to
  b.merge("o", "n");    // on
  b.merge("on", "e");   // one
  b.merge("e", "r");    // er
  b.merge("e", "d");    // ed
  b.merge("i", "n");    // in
  b.merge("in", "g");   // ing
  b.merge("l", "y");    // ly
}

// Fragment bytes: 'j' needs one 'v' tail, 'x' needs two; a dangling lead
// renders as 'q'. None of these letters occur in ordinary fixture words.
void add_fragments(Tokenizer::Builder& b) {
  b.fragments('v', 'q', {{'j', 1}, {'x', 2}});
}

constexpr const char* kFixtureAlphabet = "_abcdefghijklmnopqrstuvwxyz.";

}  // namespace

Tokenizer ambiguous_tokenizer() {
  Tokenizer::Builder b;
  b.special("<s>");
  b.special("</s>");
  b.bases(kFixtureAlphabet);
  add_marker_chains(b);
  add_completion_chains(b);
  add_fragments(b);
  // Whole words that also exist piecewise in the vocabulary.
  b.merge("_no", "body");   // _nobody
  b.merge("_out", "put");   // _output
  b.merge("_in", "to");     // _into
  b.merge("_some", "one");  // _someone
  b.merge("_work", "er");   // _worker
  b.merge("_play", "ed");   // _played
  return std::move(b).build();
}

Tokenizer transient_tokenizer() {
  Tokenizer::Builder b;
  b.bases(kFixtureAlphabet);
  add_marker_chains(b);
  add_completion_chains(b);
  add_fragments(b);
  return std::move(b).build();
}

Tokenizer plain_tokenizer() {
  Tokenizer::Builder b;
  b.bases(kFixtureAlphabet);
  add_marker_chains(b);
  add_completion_chains(b);
  // j/x/v/q stay ordinary bytes here: no fragment rendering
  return std::move(b).build();
}

Tokenizer dead_end_tokenizer() {
  Tokenizer::Builder b;
  b.bases("ab");
  b.merge("a", "a");
  b.merge("a", "b");
  b.merge("b", "a");
  b.merge("b", "b");
  return std::move(b).build();
}

std::string fixture_corpus(size_t lines, uint64_t seed) {
  // Weighted word soup; weights give the n-gram model skewed contexts with a
  // handful of seen continuations each.
  static const std::pair<const char*, int> kWords[] = {
      {"the", 20},    {"and", 14},     {"cat", 10},     {"dog", 10},
      {"no", 9},      {"nobody", 8},   {"body", 6},     {"out", 9},
      {"output", 8},  {"put", 6},      {"in", 10},      {"into", 8},
      {"to", 12},     {"some", 8},     {"someone", 7},  {"one", 9},
      {"work", 9},    {"worker", 7},   {"worked", 6},   {"working", 6},
      {"play", 8},    {"played", 6},   {"player", 6},   {"playing", 5},
      {"jv", 9},      {"xvv", 7},      {"jvcat", 3},    {"dogjv", 3},
      {"body.", 2},   {"dog.", 3},     {"cat.", 3},     {"one.", 2},
  };
  int total = 0;
  for (const auto& [w, f] : kWords) total += f;

  Rng rng(seed);
  std::ostringstream out;
  for (size_t l = 0; l < lines; ++l) {
    size_t n = 8 + rng.next_below(7);
    for (size_t i = 0; i < n; ++i) {
      int pick = int(rng.next_below(uint64_t(total)));
      const char* word = kWords[0].first;
      for (const auto& [w, f] : kWords) {
        if (pick < f) {
          word = w;
          break;
        }
        pick -= f;
      }
      if (i) out << ' ';
      out << word;
    }
    out << '\n';
  }
  return out.str();
}

std::string synthetic_corpus(size_t lines, uint64_t seed) {
  static const char* kOnsets[] = {"b", "c", "d", "f", "g", "h", "k", "l",
                                  "m", "n", "p", "r", "s", "t", "w", "st",
                                  "tr", "pl", "gr", "sh"};
  static const char* kNuclei[] = {"a", "e", "i", "o", "u", "ai", "ea", "ou"};
  static const char* kCodas[] = {"", "n", "r", "s", "t", "l", "ng", "rd",
                                 "st", "ck"};
  Rng word_rng(seed);
  std::vector<std::string> words;
  words.reserve(1200);
  for (size_t i = 0; i < 1200; ++i) {
    std::string w;
    size_t syllables = 1 + word_rng.next_below(3);
    for (size_t s = 0; s < syllables; ++s) {
      w += kOnsets[word_rng.next_below(std::size(kOnsets))];
      w += kNuclei[word_rng.next_below(std::size(kNuclei))];
      w += kCodas[word_rng.next_below(std::size(kCodas))];
    }
    words.push_back(std::move(w));
  }

  // Zipf-ish usage: word w picked with weight 1/(rank+4).
  std::vector<double> cum;
  cum.reserve(words.size());
  double acc = 0.0;
  for (size_t r = 0; r < words.size(); ++r) {
    acc += 1.0 / double(r + 4);
    cum.push_back(acc);
  }

  Rng rng(splitmix64(seed));
  std::ostringstream out;
  for (size_t l = 0; l < lines; ++l) {
    size_t n = 6 + rng.next_below(9);
    for (size_t i = 0; i < n; ++i) {
      double r = rng.next_double() * acc;
      size_t idx = size_t(std::lower_bound(cum.begin(), cum.end(), r) -
                          cum.begin());
      if (idx >= words.size()) idx = words.size() - 1;
      if (i) out << ' ';
      out << words[idx];
    }
    out << '\n';
  }
  return out.str();
}

Tokenizer calibration_tokenizer(int vocab_size) {
  return Tokenizer::train(synthetic_corpus(), vocab_size, {"<s>", "</s>"});
}

NGramLm fixture_ngram(const Tokenizer& tk, int n, double alpha) {
  return NGramLm::train_text(tk, fixture_corpus(), n, alpha);
}

HashLm fixture_hash(const Tokenizer& tk, double concentration, int context,
                    std::string key) {
  return HashLm(tk.vocab_size(), context, std::move(key), concentration);
}

std::vector<std::string> prompts_from_corpus(const std::string& corpus,
                                             size_t count, bool by_words,
                                             int unit_count, uint64_t seed) {
  std::vector<std::string> lines;
  std::istringstream in(corpus);
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) lines.push_back(line);
  if (lines.empty()) return {};

  Rng rng(seed);
  std::vector<std::string> prompts;
  prompts.reserve(count);
  for (size_t i = 0; i < count; ++i) {
    const std::string& src = lines[rng.next_below(lines.size())];
    if (by_words) {
      std::istringstream ws(src);
      std::string word, prompt;
      int taken = 0;
      while (taken < unit_count && ws >> word) {
        if (taken) prompt += ' ';
        prompt += word;
        ++taken;
      }
      prompts.push_back(prompt);
    } else {
      prompts.push_back(src.substr(0, size_t(unit_count)));
    }
  }
  return prompts;
}

}  // namespace stegomark::fixtures
