// Steganographic embed/extract over a tokenizer + model pair.

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "stegomark/errors.hpp"
#include "stegomark/lm.hpp"
#include "stegomark/stego.hpp"

using namespace stegomark;

namespace {

StegoConfig make_config(const std::string& codec, const std::string& filter,
                        int top_k, uint64_t seed, int precision,
                        bool length_prefixed) {
  StegoConfig cfg;
  cfg.codec = codec == "huffman" ? Codec::huffman : Codec::arithmetic;
  if (codec != "huffman" && codec != "arith" && codec != "arithmetic")
    throw ParseError("unknown codec: " + codec);
  if (filter == "none")
    cfg.filter = Filter::none;
  else if (filter == "stepwise")
    cfg.filter = Filter::stepwise;
  else if (filter == "basic")
    cfg.filter = Filter::basic;
  else if (filter == "mwis")
    cfg.filter = Filter::mwis;
  else
    throw ParseError("unknown filter: " + filter);
  cfg.sampling.top_k = top_k;
  cfg.sampling.seed = seed;
  cfg.precision = precision;
  cfg.length_mode =
      length_prefixed ? LengthMode::length_prefixed : LengthMode::out_of_band;
  return cfg;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"language-model steganography"};
  app.require_subcommand(1);

  std::string tokenizer_path, model_path, prompt, codec = "arith",
              filter = "stepwise", out_path;
  int top_k = 64, precision = 32;
  uint64_t seed = 0;
  bool length_prefixed = false;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--tokenizer", tokenizer_path, "tokenizer file")->required();
    cmd->add_option("--model", model_path, "model file")->required();
    cmd->add_option("--prompt", prompt, "prompt text")->required();
    cmd->add_option("--codec", codec, "arith|huffman");
    cmd->add_option("--filter", filter, "none|stepwise|basic|mwis");
    cmd->add_option("--top-k", top_k, "candidate pool size");
    cmd->add_option("--seed", seed, "sampling seed");
    cmd->add_option("--precision", precision, "arithmetic register bits");
    cmd->add_flag("--length-prefixed", length_prefixed,
                  "self-delimiting 16-bit length prefix");
    cmd->add_option("--out", out_path, "write the JSON result here");
  };

  auto* embed_cmd = app.add_subcommand("embed", "embed a secret message");
  std::string message_hex, message_file;
  size_t message_index = 0;
  add_common(embed_cmd);
  embed_cmd->add_option("--message", message_hex, "message as hex");
  embed_cmd->add_option("--message-file", message_file,
                        "file of hex messages, one per line");
  embed_cmd->add_option("--message-index", message_index,
                        "line to embed from --message-file");

  auto* extract_cmd = app.add_subcommand("extract", "extract a secret message");
  std::string stegotext, stegotext_file;
  size_t length_bits = 0;
  add_common(extract_cmd);
  extract_cmd->add_option("--stegotext", stegotext, "stegotext (continuation)");
  extract_cmd->add_option("--stegotext-file", stegotext_file,
                          "read the stegotext from a file");
  extract_cmd->add_option("--length-bits", length_bits,
                          "message length for out-of-band mode");

  CLI11_PARSE(app, argc, argv);

  try {
    Tokenizer tk = Tokenizer::load(tokenizer_path);
    std::unique_ptr<LanguageModel> lm = load_model(model_path);
    StegoConfig cfg = make_config(codec, filter, top_k, seed, precision,
                                  length_prefixed);

    std::string result;
    if (*embed_cmd) {
      if (!message_file.empty()) {
        std::istringstream lines(read_file(message_file));
        std::string line;
        for (size_t i = 0; i <= message_index; ++i)
          if (!std::getline(lines, line))
            throw ParseError("message file has no line " +
                             std::to_string(message_index));
        message_hex = line;
      }
      if (message_hex.empty())
        throw ParseError("give --message or --message-file");
      SecretMessage msg = SecretMessage::from_hex(message_hex);
      EmbedResult er = embed(*lm, tk, prompt, msg, cfg);
      result = embed_result_to_json(er);
    } else {
      if (!stegotext_file.empty()) stegotext = read_file(stegotext_file);
      std::optional<size_t> hint;
      if (cfg.length_mode == LengthMode::out_of_band) {
        if (length_bits == 0)
          throw ParseError("--length-bits is required without --length-prefixed");
        hint = length_bits;
      }
      SecretMessage msg = extract(*lm, tk, prompt, stegotext, cfg, hint);
      nlohmann::ordered_json j;
      j["message_hex"] = msg.to_hex();
      j["bits"] = msg.length();
      result = j.dump(2);
    }
    if (!out_path.empty()) {
      std::ofstream out(out_path, std::ios::binary);
      out << result << "\n";
    }
    std::cout << result << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
