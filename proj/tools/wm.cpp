// Watermark embedding, detection, and AUROC evaluation.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "stegomark/errors.hpp"
#include "stegomark/lm.hpp"
#include "stegomark/util.hpp"
#include "stegomark/watermark.hpp"

using namespace stegomark;

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open file: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<std::filesystem::path> text_files(const std::string& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file()) files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  return files;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"language-model watermarking"};
  app.require_subcommand(1);

  std::string tokenizer_path, model_path, scheme_name = "lefthash",
              key_hex = "00112233445566778899aabbccddeeff", prompt;
  double gamma = 0.5, delta = 2.0;
  int h = -1;

  auto add_scheme = [&](CLI::App* cmd, bool needs_model) {
    cmd->add_option("--tokenizer", tokenizer_path, "tokenizer file")->required();
    if (needs_model)
      cmd->add_option("--model", model_path, "model file")->required();
    cmd->add_option("--scheme", scheme_name,
                    "lefthash|selfhash|unigram|gumbel");
    cmd->add_option("--key", key_hex, "secret key (hex)");
    cmd->add_option("--gamma", gamma, "green list fraction");
    cmd->add_option("--delta", delta, "green logit boost");
    cmd->add_option("--context-width", h, "override the scheme context width");
  };

  auto* embed_cmd = app.add_subcommand("embed", "generate watermarked text");
  size_t tokens = 200;
  uint64_t seed = 0;
  int rollback_q = 0, rollback_max = 32;
  std::string out_path, trace_path;
  add_scheme(embed_cmd, true);
  embed_cmd->add_option("--prompt", prompt, "prompt text")->required();
  embed_cmd->add_option("--tokens", tokens, "tokens to generate");
  embed_cmd->add_option("--seed", seed, "sampling seed");
  embed_cmd->add_option("--rollback-q", rollback_q,
                        "observation period (0 disables rollback)");
  embed_cmd->add_option("--rollback-max", rollback_max, "rollback budget");
  embed_cmd->add_option("--out", out_path, "write the text here");
  embed_cmd->add_option("--trace", trace_path, "write the score trace here");

  auto* detect_cmd = app.add_subcommand("detect", "score a text");
  std::string text_path;
  double threshold = 4.0;
  add_scheme(detect_cmd, false);
  detect_cmd->add_option("--text", text_path, "text file")->required();
  detect_cmd->add_option("--prompt", prompt, "prompt the text continues");
  detect_cmd->add_option("--threshold", threshold, "decision threshold");

  auto* eval_cmd = app.add_subcommand("eval", "AUROC over two directories");
  std::string pos_dir, neg_dir;
  add_scheme(eval_cmd, false);
  eval_cmd->add_option("--pos", pos_dir, "watermarked text directory")->required();
  eval_cmd->add_option("--neg", neg_dir, "unwatermarked text directory")->required();
  eval_cmd->add_option("--prompt", prompt, "shared prompt, if any");

  CLI11_PARSE(app, argc, argv);

  try {
    Tokenizer tk = Tokenizer::load(tokenizer_path);
    SchemeConfig cfg;
    cfg.kind = scheme_from_string(scheme_name);
    cfg.key = from_hex(key_hex);
    cfg.gamma = gamma;
    cfg.delta = delta;
    cfg.h = h;
    cfg.vocab_size = tk.vocab_size();

    if (*embed_cmd) {
      std::unique_ptr<LanguageModel> lm = load_model(model_path);
      std::optional<RollbackConfig> rb;
      if (rollback_q > 0) rb = RollbackConfig{rollback_q, rollback_max};
      WatermarkResult wr =
          embed_watermark(*lm, tk, prompt, cfg, tokens, rb, seed);
      if (!out_path.empty()) {
        std::ofstream out(out_path, std::ios::binary);
        out << wr.text;
      }
      if (!trace_path.empty()) write_score_trace(trace_path, wr.trace);
      nlohmann::ordered_json j;
      j["text"] = wr.text;
      j["tokens"] = wr.tokens.size();
      j["strength"] = strength(wr.trace, cfg);
      j["rollbacks"] = wr.rollbacks;
      j["runtime_seconds"] = wr.runtime_seconds;
      std::cout << j.dump(2) << "\n";
    } else if (*detect_cmd) {
      ScoreTrace trace = score_text(cfg, tk, read_file(text_path), prompt);
      double phi = strength(trace, cfg);
      nlohmann::ordered_json j;
      j["strength"] = phi;
      j["scored_positions"] = trace.scored();
      j["threshold"] = threshold;
      j["watermarked"] = phi >= threshold;
      std::cout << j.dump(2) << "\n";
    } else {
      std::vector<double> pos, neg;
      for (const auto& f : text_files(pos_dir))
        pos.push_back(strength(score_text(cfg, tk, read_file(f), prompt), cfg));
      for (const auto& f : text_files(neg_dir))
        neg.push_back(strength(score_text(cfg, tk, read_file(f), prompt), cfg));
      nlohmann::ordered_json j;
      j["positives"] = pos.size();
      j["negatives"] = neg.size();
      j["auroc"] = auroc(pos, neg);
      j["pos_mean"] = mean(pos);
      j["neg_mean"] = mean(neg);
      std::cout << j.dump(2) << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
