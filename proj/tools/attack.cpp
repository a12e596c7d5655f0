// Token-replacement attack driver.

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "stegomark/attack.hpp"
#include "stegomark/errors.hpp"
#include "stegomark/lm.hpp"

using namespace stegomark;

int main(int argc, char** argv) {
  CLI::App app{"token replacement attack"};
  std::string tokenizer_path, model_path, in_path, out_path, prompt;
  double epsilon = 0.2;
  uint64_t seed = 0;
  app.add_option("--tokenizer", tokenizer_path, "tokenizer file")->required();
  app.add_option("--model", model_path, "replacement model file")->required();
  app.add_option("--epsilon", epsilon, "per-token selection probability");
  app.add_option("--seed", seed, "attack seed");
  app.add_option("--in", in_path, "input text file")->required();
  app.add_option("--out", out_path, "output text file")->required();
  app.add_option("--prompt", prompt, "left context for the first tokens");

  CLI11_PARSE(app, argc, argv);

  try {
    Tokenizer tk = Tokenizer::load(tokenizer_path);
    std::unique_ptr<LanguageModel> lm = load_model(model_path);
    std::ifstream in(in_path, std::ios::binary);
    if (!in) throw ParseError("cannot open file: " + in_path);
    std::stringstream buf;
    buf << in.rdbuf();

    AttackResult r =
        replacement_attack({epsilon, seed}, *lm, tk, buf.str(), prompt);
    std::ofstream out(out_path, std::ios::binary);
    out << r.text;
    std::cout << "selected " << r.selected << " positions\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
