#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "stegomark/consistency.hpp"
#include "stegomark/stego.hpp"
#include "stegomark/watermark.hpp"

namespace stegomark {

// Declarative experiment description; see the README for the file schema.
struct ExperimentConfig {
  std::filesystem::path tokenizer_path;
  std::filesystem::path model_path;
  std::filesystem::path corpus_path;
  std::filesystem::path out_dir;
  uint64_t seed = 1;
  unsigned threads = 0;

  bool prompt_by_words = true;
  int prompt_units = 10;

  // investigate
  std::vector<size_t> lengths = {25, 50, 100, 200, 400};
  size_t investigate_samples = 500;
  int top_m = 64;
  bool record_pools = true;

  // stego
  std::vector<int> top_k = {4, 16, 64};
  std::vector<Filter> filters = {Filter::stepwise, Filter::basic,
                                 Filter::mwis, Filter::none};
  std::vector<Codec> codecs = {Codec::arithmetic};
  size_t stego_samples = 200;
  size_t message_bits = 128;
  std::vector<double> bpt_buckets = {2.0, 3.0, 4.0, 5.0, 6.0};

  // watermark
  std::vector<Scheme> schemes = {Scheme::lefthash, Scheme::selfhash,
                                 Scheme::unigram, Scheme::gumbel};
  double gamma = 0.5;
  double delta = 2.0;
  size_t wm_tokens = 200;
  size_t wm_samples = 500;
  std::vector<double> epsilons = {0.0, 0.2, 0.4};
  int rollback_q = 10;
  int rollback_max = 32;
  std::string wm_key_hex = "00112233445566778899aabbccddeeff";

  static ExperimentConfig from_file(const std::filesystem::path& path);
  std::string to_json() const;
};

struct InvestigateCell {
  size_t length = 0;
  size_t samples = 0;
  uint64_t seed = 0;
  RateAggregates rates;
  double runtime_seconds = 0.0;
};

struct StegoCell {  // one (filter, codec, top_k) grid point
  Filter filter{};
  Codec codec{};
  int top_k = 0;
  size_t samples = 0;
  size_t extraction_errors = 0;
  size_t hard_failures = 0;  // budget / no-continuation aborts
  double mean_bpt = 0.0;
  double mean_ppl = 0.0;
  double mean_kld = 0.0;
  double mean_time = 0.0;
  uint64_t seed = 0;
};

struct StegoBucketRow {  // per (filter, codec, BPT interval) rollup
  Filter filter{};
  Codec codec{};
  double bpt_lo = 0.0, bpt_hi = 0.0;
  size_t samples = 0;
  bool insufficient = false;  // n <= 20: reported but never averaged silently
  double mean_ppl = 0.0;
  double mean_kld = 0.0;
  double mean_time = 0.0;
  double extraction_ok = 0.0;
  std::map<int, size_t> top_k_provenance;  // which top-k fed this bucket
};

struct WatermarkCell {
  Scheme scheme{};
  bool rollback = false;
  double epsilon = 0.0;
  size_t samples = 0;
  double strength_mean = 0.0;
  double auroc = 0.0;
  double mean_ppl = 0.0;  // only for epsilon == 0
  double mean_time = 0.0;
  int rollbacks_total = 0;
  uint64_t seed = 0;
};

struct Report {
  std::string experiment;
  std::string config_json;
  std::vector<InvestigateCell> investigate_cells;
  std::vector<StegoCell> stego_cells;
  std::vector<StegoBucketRow> stego_buckets;
  std::vector<WatermarkCell> watermark_cells;
  std::map<int64_t, double> q_calibration;  // persistence histogram
  double runtime_seconds = 0.0;

  std::string to_json() const;
  // report.json plus the CSV tables for the experiment kind.
  void write_files(const std::filesystem::path& out_dir) const;
};

Report run_investigation(const ExperimentConfig& cfg);
Report run_stego_bench(const ExperimentConfig& cfg);
Report run_wm_bench(const ExperimentConfig& cfg);

// Unfiltered multinomial generation recording a consistency trace. Pools of
// `top_m` candidates (with candidate-level flags) are recorded at steps whose
// prefix is still consistent when `record_pools` is set.
GenerationTrace trace_generation(const Tokenizer& tk, const LanguageModel& lm,
                                 std::string_view prompt, size_t tokens,
                                 int top_m, bool record_pools, uint64_t seed);

std::string filter_to_string(Filter f);
Filter filter_from_string(std::string_view s);
std::string codec_to_string(Codec c);
Codec codec_from_string(std::string_view s);

// Writes the fixture tokenizers, corpus, and models into `dir` so the CLI
// tools have ready-made inputs.
void write_fixture_set(const std::filesystem::path& dir);

}  // namespace stegomark
