#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "stegomark/errors.hpp"
#include "stegomark/fixtures.hpp"
#include "stegomark/tokenizer.hpp"
#include "stegomark/util.hpp"

using namespace stegomark;

namespace {

Tokenizer chain_tokenizer() {
  Tokenizer::Builder b;
  b.bases("abc");
  b.merge("a", "b");    // ab
  b.merge("ab", "c");   // abc
  return std::move(b).build();
}

std::filesystem::path temp_file(const char* name) {
  auto dir = std::filesystem::temp_directory_path() / "stegomark_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("training learns the expected merge") {
  // "abab": pair (a,b) occurs twice, (b,a) once
  Tokenizer tk = Tokenizer::train("abab", 3 + 1, {});
  REQUIRE(tk.vocab_size() == 4);
  CHECK(tk.id_of_surface("ab").has_value());
  CHECK(tk.merges().size() == 1);
}

TEST_CASE("training with no merge budget") {
  Tokenizer tk = Tokenizer::train("x", 2, {});  // alphabet: x + marker
  CHECK(tk.merges().empty());
  CHECK_THROWS_AS(Tokenizer::train("x", 1, {}), VocabError);
}

TEST_CASE("training is byte-identical across runs") {
  std::string corpus = fixtures::fixture_corpus(50, 3);
  Tokenizer a = Tokenizer::train(corpus, 80, {"<s>"});
  Tokenizer b = Tokenizer::train(corpus, 80, {"<s>"});
  CHECK(a == b);
  CHECK(a.to_json_string() == b.to_json_string());
}

TEST_CASE("encode applies merges lowest rank first") {
  Tokenizer tk = chain_tokenizer();
  TokenSequence seq = tk.encode("abc");
  REQUIRE(seq.size() == 1);
  CHECK(tk.surface(seq.ids[0]) == "abc");
  CHECK(seq.spans[0] == Span{0, 3});
}

TEST_CASE("encode of empty text") {
  Tokenizer tk = chain_tokenizer();
  CHECK(tk.encode("").empty());
}

TEST_CASE("whole-word token wins over its parts") {
  Tokenizer tk = fixtures::ambiguous_tokenizer();
  TokenSequence seq = tk.encode(" nobody");
  REQUIRE(seq.size() == 1);
  CHECK(tk.display(tk.surface(seq.ids[0])) == "_nobody");
  CHECK(seq.spans[0] == Span{0, 7});
}

TEST_CASE("decode restores spaces and skips specials") {
  Tokenizer tk = fixtures::ambiguous_tokenizer();
  int no = *tk.id_of_surface(tk.internalize("_no"));
  int body = *tk.id_of_surface("body");
  CHECK(tk.decode(std::vector<int>{no, body}) == " nobody");
  CHECK(tk.decode(std::vector<int>{}) == "");

  int bos = *tk.id_of_surface("<s>");
  int ab = *tk.id_of_surface(tk.internalize("_a"));
  CHECK(tk.decode(std::vector<int>{bos, ab}) == " a");
  CHECK(tk.decode(std::vector<int>{bos, ab}, false) == "<s> a");
  CHECK_THROWS_AS(tk.decode(std::vector<int>{9999}), ParseError);
}

TEST_CASE("unencodable byte reports its offset") {
  Tokenizer tk = chain_tokenizer();
  try {
    tk.encode("abzc");
    FAIL("expected EncodeError");
  } catch (const EncodeError& e) {
    CHECK(e.offset == 2);
  }
}

TEST_CASE("span coverage reconstructs the input") {
  Tokenizer tk = fixtures::ambiguous_tokenizer();
  Rng rng(11);
  std::string corpus = fixtures::fixture_corpus(40, 5);
  std::istringstream in(corpus);
  std::string line;
  while (std::getline(in, line)) {
    TokenSequence seq = tk.encode(line);
    std::string rebuilt;
    size_t cursor = 0;
    for (size_t i = 0; i < seq.size(); ++i) {
      CHECK(seq.spans[i].begin == cursor);
      cursor = seq.spans[i].end;
      rebuilt += line.substr(seq.spans[i].begin,
                             seq.spans[i].end - seq.spans[i].begin);
    }
    CHECK(cursor == line.size());
    CHECK(rebuilt == line);
  }
}

TEST_CASE("encode output is a fixed point of the round trip") {
  Tokenizer tk = fixtures::ambiguous_tokenizer();
  std::string corpus = fixtures::fixture_corpus(30, 9);
  std::istringstream in(corpus);
  std::string line;
  while (std::getline(in, line)) {
    TokenSequence once = tk.encode(line);
    TokenSequence twice = tk.encode(tk.decode(once));
    CHECK(once == twice);
  }
}

TEST_CASE("save/load round trip") {
  Tokenizer tk = fixtures::ambiguous_tokenizer();
  auto path = temp_file("ambig.json");
  tk.save(path);
  Tokenizer loaded = Tokenizer::load(path);
  CHECK(loaded == tk);

  // byte-exact re-serialization
  loaded.save(temp_file("ambig2.json"));
  std::ifstream f1(path), f2(temp_file("ambig2.json"));
  std::string s1((std::istreambuf_iterator<char>(f1)), {});
  std::string s2((std::istreambuf_iterator<char>(f2)), {});
  CHECK(s1 == s2);
}

TEST_CASE("load rejects malformed files") {
  CHECK_THROWS_AS(Tokenizer::from_json_string("{"), ParseError);

  // duplicate surface
  CHECK_THROWS_AS(Tokenizer::from_json_string(R"({
    "version":1,"marker":1,
    "vocab":[{"id":0,"surface":"61"},{"id":1,"surface":"61"}],
    "merges":[],"specials":[]})"),
                  ParseError);

  // merge referencing unknown id
  CHECK_THROWS_AS(Tokenizer::from_json_string(R"({
    "version":1,"marker":1,
    "vocab":[{"id":0,"surface":"61"},{"id":1,"surface":"62"}],
    "merges":[[0,5,1]],"specials":[]})"),
                  ParseError);

  // merged surface not the concatenation
  CHECK_THROWS_AS(Tokenizer::from_json_string(R"({
    "version":1,"marker":1,
    "vocab":[{"id":0,"surface":"61"},{"id":1,"surface":"62"},
             {"id":2,"surface":"6363"}],
    "merges":[[0,1,2]],"specials":[]})"),
                  ParseError);

  // non-dense ids
  CHECK_THROWS_AS(Tokenizer::from_json_string(R"({
    "version":1,"marker":1,
    "vocab":[{"id":0,"surface":"61"},{"id":2,"surface":"62"}],
    "merges":[],"specials":[]})"),
                  ParseError);
}

TEST_CASE("dangling fragment leads render as the replacement byte") {
  Tokenizer tk = fixtures::ambiguous_tokenizer();
  int j = *tk.id_of_surface("j");
  int x = *tk.id_of_surface("x");
  int v = *tk.id_of_surface("v");

  CHECK(tk.decode(std::vector<int>{j}) == "q");       // no tail yet
  CHECK(tk.decode(std::vector<int>{j, v}) == "jv");   // complete
  CHECK(tk.decode(std::vector<int>{x, v}) == "qv");   // needs two tails
  CHECK(tk.decode(std::vector<int>{x, v, v}) == "xvv");
  CHECK(tk.decode(std::vector<int>{j, j, v}) == "qjv");

  // encode normalizes its input the same way, keeping the round trip stable
  TokenSequence seq = tk.encode("j");
  REQUIRE(seq.size() == 1);
  CHECK(tk.surface(seq.ids[0]) == "q");
  CHECK(tk.encode(tk.decode(seq)) == seq);
}

TEST_CASE("fragment spec survives save/load") {
  Tokenizer tk = fixtures::transient_tokenizer();
  auto path = temp_file("transient.json");
  tk.save(path);
  Tokenizer back = Tokenizer::load(path);
  CHECK(back == tk);
  REQUIRE(back.has_fragments());
  CHECK(back.decode(back.encode(" work jv")) == " work jv");
}

TEST_CASE("trained calibration tokenizer is reasonably large") {
  Tokenizer tk = fixtures::calibration_tokenizer(2048);
  CHECK(tk.vocab_size() >= 1500);
  CHECK(tk.vocab_size() <= 2048);
  std::string line = "stan grear ploung bea tran";
  TokenSequence seq = tk.encode(line);
  CHECK(tk.decode(seq) == line);
  CHECK(tk.encode(tk.decode(seq)) == seq);
}
