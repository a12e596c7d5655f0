// Tokenizer utility: train, inspect, encode, decode.

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "stegomark/errors.hpp"
#include "stegomark/tokenizer.hpp"

using namespace stegomark;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"subword tokenizer utility"};
  app.require_subcommand(1);

  auto* train = app.add_subcommand("train", "train a tokenizer on a corpus");
  std::string corpus_path, out_path;
  int vocab_size = 512;
  std::vector<std::string> specials;
  train->add_option("--corpus", corpus_path, "corpus text file")->required();
  train->add_option("--vocab-size", vocab_size, "target vocabulary size");
  train->add_option("--special", specials, "special token surface (repeatable)");
  train->add_option("--out", out_path, "output tokenizer file")->required();

  auto* encode = app.add_subcommand("encode", "encode text to token ids");
  std::string tokenizer_path, text;
  bool check_roundtrip = false;
  encode->add_option("--tokenizer", tokenizer_path, "tokenizer file")->required();
  encode->add_option("--text", text, "text to encode")->required();
  encode->add_flag("--check-roundtrip", check_roundtrip,
                   "fail unless decode(encode(text)) == text");

  auto* decode = app.add_subcommand("decode", "decode token ids to text");
  std::string ids_csv;
  bool keep_specials = false;
  decode->add_option("--tokenizer", tokenizer_path, "tokenizer file")->required();
  decode->add_option("--ids", ids_csv, "comma separated token ids")->required();
  decode->add_flag("--keep-specials", keep_specials,
                   "render special tokens instead of skipping them");

  auto* info = app.add_subcommand("info", "print tokenizer summary");
  info->add_option("--tokenizer", tokenizer_path, "tokenizer file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      Tokenizer tk = Tokenizer::train(read_file(corpus_path), vocab_size, specials);
      tk.save(out_path);
      std::cout << "vocab " << tk.vocab_size() << ", merges "
                << tk.merges().size() << " -> " << out_path << "\n";
    } else if (*encode) {
      Tokenizer tk = Tokenizer::load(tokenizer_path);
      TokenSequence seq = tk.encode(text);
      nlohmann::ordered_json j;
      j["ids"] = seq.ids;
      auto& spans = j["spans"] = nlohmann::ordered_json::array();
      for (const Span& s : seq.spans) spans.push_back({s.begin, s.end});
      auto& surfaces = j["surfaces"] = nlohmann::ordered_json::array();
      for (int id : seq.ids) surfaces.push_back(tk.display(tk.surface(id)));
      std::cout << j.dump(2) << "\n";
      if (check_roundtrip) {
        if (tk.encode(tk.decode(seq)) != seq) {
          std::cerr << "round trip is not stable for this input\n";
          return 1;
        }
      }
    } else if (*decode) {
      Tokenizer tk = Tokenizer::load(tokenizer_path);
      std::vector<int> ids;
      std::stringstream ss{ids_csv};
      for (std::string part; std::getline(ss, part, ',');)
        ids.push_back(std::stoi(part));
      std::cout << tk.decode(ids, !keep_specials) << "\n";
    } else if (*info) {
      Tokenizer tk = Tokenizer::load(tokenizer_path);
      std::cout << "vocab " << tk.vocab_size() << ", merges "
                << tk.merges().size() << ", specials " << tk.specials().size()
                << ", fragments " << (tk.has_fragments() ? "yes" : "no")
                << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
