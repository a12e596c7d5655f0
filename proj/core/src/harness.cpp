#include "stegomark/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <mutex>
#include <sstream>

#include <json.hpp>

#include "stegomark/attack.hpp"
#include "stegomark/errors.hpp"
#include "stegomark/fixtures.hpp"
#include "stegomark/remote_lm.hpp"
#include "stegomark/session.hpp"
#include "stegomark/util.hpp"

namespace stegomark {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open file: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

double elapsed_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

}  // namespace

std::string filter_to_string(Filter f) {
  switch (f) {
    case Filter::none: return "none";
    case Filter::stepwise: return "stepwise";
    case Filter::basic: return "basic";
    case Filter::mwis: return "mwis";
  }
  return "?";
}

Filter filter_from_string(std::string_view s) {
  if (s == "none") return Filter::none;
  if (s == "stepwise") return Filter::stepwise;
  if (s == "basic") return Filter::basic;
  if (s == "mwis") return Filter::mwis;
  throw ParseError("unknown filter: " + std::string(s));
}

std::string codec_to_string(Codec c) {
  return c == Codec::arithmetic ? "arithmetic" : "huffman";
}

Codec codec_from_string(std::string_view s) {
  if (s == "arithmetic" || s == "arith") return Codec::arithmetic;
  if (s == "huffman") return Codec::huffman;
  throw ParseError("unknown codec: " + std::string(s));
}

// --- config ------------------------------------------------------------------

ExperimentConfig ExperimentConfig::from_file(
    const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw ParseError(std::string("config file: ") + e.what());
  }
  ExperimentConfig cfg;
  try {
    cfg.tokenizer_path = j.at("tokenizer").get<std::string>();
    cfg.model_path = j.at("model").get<std::string>();
    cfg.corpus_path = j.at("corpus").get<std::string>();
    if (j.contains("out_dir")) cfg.out_dir = j["out_dir"].get<std::string>();
    cfg.seed = j.value("seed", uint64_t(1));
    cfg.threads = j.value("threads", 0u);
    if (j.contains("prompt")) {
      const auto& p = j["prompt"];
      cfg.prompt_by_words = p.value("unit", "words") == std::string("words");
      cfg.prompt_units = p.value("count", 10);
    }
    if (j.contains("investigate")) {
      const auto& v = j["investigate"];
      if (v.contains("lengths"))
        cfg.lengths = v["lengths"].get<std::vector<size_t>>();
      cfg.investigate_samples = v.value("samples", cfg.investigate_samples);
      cfg.top_m = v.value("top_m", cfg.top_m);
      cfg.record_pools = v.value("record_pools", cfg.record_pools);
    }
    if (j.contains("stego")) {
      const auto& v = j["stego"];
      if (v.contains("top_k")) cfg.top_k = v["top_k"].get<std::vector<int>>();
      if (v.contains("filters")) {
        cfg.filters.clear();
        for (const auto& f : v["filters"])
          cfg.filters.push_back(filter_from_string(f.get<std::string>()));
      }
      if (v.contains("codecs")) {
        cfg.codecs.clear();
        for (const auto& c : v["codecs"])
          cfg.codecs.push_back(codec_from_string(c.get<std::string>()));
      }
      cfg.stego_samples = v.value("samples", cfg.stego_samples);
      cfg.message_bits = v.value("message_bits", cfg.message_bits);
      if (v.contains("bpt_buckets"))
        cfg.bpt_buckets = v["bpt_buckets"].get<std::vector<double>>();
    }
    if (j.contains("watermark")) {
      const auto& v = j["watermark"];
      if (v.contains("schemes")) {
        cfg.schemes.clear();
        for (const auto& s : v["schemes"])
          cfg.schemes.push_back(scheme_from_string(s.get<std::string>()));
      }
      cfg.gamma = v.value("gamma", cfg.gamma);
      cfg.delta = v.value("delta", cfg.delta);
      cfg.wm_tokens = v.value("tokens", cfg.wm_tokens);
      cfg.wm_samples = v.value("samples", cfg.wm_samples);
      if (v.contains("epsilons"))
        cfg.epsilons = v["epsilons"].get<std::vector<double>>();
      cfg.rollback_q = v.value("q", cfg.rollback_q);
      cfg.rollback_max = v.value("max_rollbacks", cfg.rollback_max);
      cfg.wm_key_hex = v.value("key", cfg.wm_key_hex);
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("config file: ") + e.what());
  }
  return cfg;
}

std::string ExperimentConfig::to_json() const {
  ordered_json j;
  j["tokenizer"] = tokenizer_path.string();
  j["model"] = model_path.string();
  j["corpus"] = corpus_path.string();
  j["out_dir"] = out_dir.string();
  j["seed"] = seed;
  j["threads"] = threads;
  j["prompt"] = {{"unit", prompt_by_words ? "words" : "chars"},
                 {"count", prompt_units}};
  j["investigate"] = {{"lengths", lengths},
                      {"samples", investigate_samples},
                      {"top_m", top_m},
                      {"record_pools", record_pools}};
  std::vector<std::string> fs, cs, ss;
  for (Filter f : filters) fs.push_back(filter_to_string(f));
  for (Codec c : codecs) cs.push_back(codec_to_string(c));
  for (Scheme s : schemes) ss.push_back(scheme_to_string(s));
  j["stego"] = {{"top_k", top_k},          {"filters", fs},
                {"codecs", cs},            {"samples", stego_samples},
                {"message_bits", message_bits},
                {"bpt_buckets", bpt_buckets}};
  j["watermark"] = {{"schemes", ss},
                    {"gamma", gamma},
                    {"delta", delta},
                    {"tokens", wm_tokens},
                    {"samples", wm_samples},
                    {"epsilons", epsilons},
                    {"q", rollback_q},
                    {"max_rollbacks", rollback_max},
                    {"key", wm_key_hex}};
  return j.dump(2);
}

// --- trace generation ----------------------------------------------------------

GenerationTrace trace_generation(const Tokenizer& tk, const LanguageModel& lm,
                                 std::string_view prompt, size_t tokens,
                                 int top_m, bool record_pools, uint64_t seed) {
  GenerationSession session(tk, lm, prompt, seed);
  GenerationTrace trace;
  trace.steps.reserve(tokens);
  for (size_t t = 0; t < tokens; ++t) {
    LmDistribution dist = session.next_distribution();
    StepRecord step;
    if (record_pools && session.currently_consistent()) {
      SamplingConfig pool_cfg;
      pool_cfg.top_k = std::min<int>(top_m, lm.vocab_size());
      CandidatePool pool = top_k_pool(dist, pool_cfg);
      step.pool.reserve(pool.entries.size());
      for (const auto& e : pool.entries)
        step.pool.push_back(
            {e.id, e.prob, session.candidate_breaks_consistency(e.id)});
    }
    int id = multinomial_sample(dist, session.rng());
    session.append(id);
    step.emitted = id;
    step.ti_now = !session.currently_consistent();
    trace.steps.push_back(std::move(step));
  }

  TokenSequence generated;
  generated.ids = session.history();
  generated.spans = session.spans();
  generated.source = SeqSource::generated;
  TokenSequence retok = tk.encode(std::string(session.text()));
  InconsistencyReport report = span_align(tk, generated, retok);
  trace.i_sit = report.i_sit.size();
  trace.i_cit = report.i_cit.size();
  trace.generated_len = generated.size();
  trace.retokenized_len = retok.size();
  trace.final_consistent = report.consistent;
  return trace;
}

// --- investigation ---------------------------------------------------------------

Report run_investigation(const ExperimentConfig& cfg) {
  auto t0 = std::chrono::steady_clock::now();
  Tokenizer tk = Tokenizer::load(cfg.tokenizer_path);
  std::unique_ptr<LanguageModel> lm = load_model(cfg.model_path);
  std::string corpus = read_file(cfg.corpus_path);

  Report report;
  report.experiment = "investigate";
  report.config_json = cfg.to_json();

  for (size_t length : cfg.lengths) {
    auto cell_t0 = std::chrono::steady_clock::now();
    uint64_t cell_seed = derive_seed(cfg.seed, length);
    std::vector<std::string> prompts = fixtures::prompts_from_corpus(
        corpus, cfg.investigate_samples, cfg.prompt_by_words,
        cfg.prompt_units, cell_seed);
    std::vector<GenerationTrace> traces(cfg.investigate_samples);
    parallel_for(
        cfg.investigate_samples,
        [&](size_t i) {
          traces[i] =
              trace_generation(tk, *lm, prompts[i], length, cfg.top_m,
                               cfg.record_pools, derive_seed(cell_seed, i));
        },
        cfg.threads);

    InvestigateCell cell;
    cell.length = length;
    cell.samples = cfg.investigate_samples;
    cell.seed = cell_seed;
    cell.rates = aggregate_rates(traces, cfg.top_m);
    cell.runtime_seconds = elapsed_since(cell_t0);
    report.investigate_cells.push_back(std::move(cell));
  }
  report.runtime_seconds = elapsed_since(t0);
  return report;
}

// --- stego bench ------------------------------------------------------------------

namespace {

struct StegoSampleRecord {
  bool ok = false;
  bool hard_failure = false;
  double bpt = 0.0;
  double ppl = 0.0;
  double kld = 0.0;
  double time = 0.0;
  int top_k = 0;
};

double finite_mean(const std::vector<double>& xs) {
  double acc = 0.0;
  size_t n = 0;
  for (double x : xs)
    if (std::isfinite(x)) {
      acc += x;
      ++n;
    }
  return n ? acc / double(n) : 0.0;
}

}  // namespace

Report run_stego_bench(const ExperimentConfig& cfg) {
  auto t0 = std::chrono::steady_clock::now();
  Tokenizer tk = Tokenizer::load(cfg.tokenizer_path);
  std::unique_ptr<LanguageModel> lm = load_model(cfg.model_path);
  std::string corpus = read_file(cfg.corpus_path);

  Report report;
  report.experiment = "stego";
  report.config_json = cfg.to_json();

  struct Tagged {
    Filter filter;
    Codec codec;
    StegoSampleRecord rec;
  };
  std::vector<Tagged> all_records;

  for (Codec codec : cfg.codecs) {
    for (Filter filter : cfg.filters) {
      for (int k : cfg.top_k) {
        uint64_t cell_seed =
            derive_seed(cfg.seed, (uint64_t(k) << 8) ^
                                      (uint64_t(filter) << 4) ^
                                      uint64_t(codec));
        std::vector<std::string> prompts = fixtures::prompts_from_corpus(
            corpus, cfg.stego_samples, cfg.prompt_by_words, cfg.prompt_units,
            cell_seed);

        std::vector<StegoSampleRecord> records(cfg.stego_samples);
        parallel_for(
            cfg.stego_samples,
            [&](size_t i) {
              StegoSampleRecord rec;
              rec.top_k = k;
              StegoConfig sc;
              sc.codec = codec;
              sc.filter = filter;
              sc.sampling.top_k = k;
              sc.sampling.seed = derive_seed(cell_seed, i);
              SecretMessage msg{
                  random_bits(cfg.message_bits, derive_seed(cell_seed, i + 1))};
              try {
                EmbedResult er = embed(*lm, tk, prompts[i], msg, sc);
                rec.bpt = er.bpt;
                rec.time = er.runtime_seconds;
                rec.kld = finite_mean(er.kld_trace);
                rec.ppl = perplexity(*lm, tk, er.stegotext, prompts[i]).ppl;
                try {
                  SecretMessage back = extract(*lm, tk, prompts[i],
                                               er.stegotext, sc,
                                               cfg.message_bits);
                  rec.ok = back == msg;
                } catch (const std::exception&) {
                  rec.ok = false;
                }
              } catch (const std::exception&) {
                rec.hard_failure = true;
              }
              records[i] = rec;
            },
            cfg.threads);

        StegoCell cell;
        cell.filter = filter;
        cell.codec = codec;
        cell.top_k = k;
        cell.seed = cell_seed;
        std::vector<double> bpts, ppls, klds, times;
        for (const auto& r : records) {
          if (r.hard_failure) {
            ++cell.hard_failures;
            continue;
          }
          ++cell.samples;
          if (!r.ok) ++cell.extraction_errors;
          bpts.push_back(r.bpt);
          ppls.push_back(r.ppl);
          klds.push_back(r.kld);
          times.push_back(r.time);
          all_records.push_back({filter, codec, r});
        }
        cell.mean_bpt = finite_mean(bpts);
        cell.mean_ppl = finite_mean(ppls);
        cell.mean_kld = finite_mean(klds);
        cell.mean_time = finite_mean(times);
        report.stego_cells.push_back(cell);
      }
    }
  }

  // Bucket rollup: samples grouped by their own BPT, pooled across top-k.
  for (Codec codec : cfg.codecs) {
    for (Filter filter : cfg.filters) {
      for (size_t b = 0; b + 1 < cfg.bpt_buckets.size(); ++b) {
        StegoBucketRow row;
        row.filter = filter;
        row.codec = codec;
        row.bpt_lo = cfg.bpt_buckets[b];
        row.bpt_hi = cfg.bpt_buckets[b + 1];
        std::vector<double> ppls, klds, times;
        size_t ok = 0;
        for (const auto& t : all_records) {
          if (t.filter != filter || t.codec != codec) continue;
          if (t.rec.bpt < row.bpt_lo || t.rec.bpt >= row.bpt_hi) continue;
          ++row.samples;
          if (t.rec.ok) ++ok;
          ppls.push_back(t.rec.ppl);
          klds.push_back(t.rec.kld);
          times.push_back(t.rec.time);
          ++row.top_k_provenance[t.rec.top_k];
        }
        row.insufficient = row.samples <= 20;
        if (row.samples > 0) {
          row.mean_ppl = finite_mean(ppls);
          row.mean_kld = finite_mean(klds);
          row.mean_time = finite_mean(times);
          row.extraction_ok = double(ok) / double(row.samples);
        }
        report.stego_buckets.push_back(std::move(row));
      }
    }
  }

  report.runtime_seconds = elapsed_since(t0);
  return report;
}

// --- watermark bench -----------------------------------------------------------------

Report run_wm_bench(const ExperimentConfig& cfg) {
  auto t0 = std::chrono::steady_clock::now();
  Tokenizer tk = Tokenizer::load(cfg.tokenizer_path);
  std::unique_ptr<LanguageModel> lm = load_model(cfg.model_path);
  std::string corpus = read_file(cfg.corpus_path);
  std::string key = from_hex(cfg.wm_key_hex);

  Report report;
  report.experiment = "watermark";
  report.config_json = cfg.to_json();

  uint64_t neg_seed = derive_seed(cfg.seed, 0xFACE);
  std::vector<std::string> neg_prompts = fixtures::prompts_from_corpus(
      corpus, cfg.wm_samples, cfg.prompt_by_words, cfg.prompt_units, neg_seed);
  // Unwatermarked texts, shared across schemes as the negative class.
  std::vector<std::string> neg_texts(cfg.wm_samples);
  parallel_for(
      cfg.wm_samples,
      [&](size_t i) {
        GenerationSession session(tk, *lm, neg_prompts[i],
                                  derive_seed(neg_seed, i),
                                  /*track_consistency=*/false);
        for (size_t t = 0; t < cfg.wm_tokens; ++t) {
          LmDistribution dist = session.next_distribution();
          session.append(multinomial_sample(dist, session.rng()));
        }
        neg_texts[i] = session.continuation();
      },
      cfg.threads);

  for (Scheme scheme : cfg.schemes) {
    SchemeConfig sc;
    sc.kind = scheme;
    sc.key = key;
    sc.gamma = cfg.gamma;
    sc.delta = cfg.delta;
    sc.vocab_size = tk.vocab_size();

    std::vector<double> neg_strengths(cfg.wm_samples);
    parallel_for(
        cfg.wm_samples,
        [&](size_t i) {
          neg_strengths[i] =
              strength(score_text(sc, tk, neg_texts[i], neg_prompts[i]), sc);
        },
        cfg.threads);

    for (bool rollback : {false, true}) {
      uint64_t pos_seed =
          derive_seed(cfg.seed, 0xBEEF ^ (uint64_t(scheme) << 2) ^
                                    uint64_t(rollback));
      std::vector<std::string> prompts = fixtures::prompts_from_corpus(
          corpus, cfg.wm_samples, cfg.prompt_by_words, cfg.prompt_units,
          pos_seed);
      std::vector<std::string> texts(cfg.wm_samples);
      std::vector<double> times(cfg.wm_samples, 0.0);
      std::vector<int> rb_counts(cfg.wm_samples, 0);
      std::vector<uint8_t> failed(cfg.wm_samples, 0);
      parallel_for(
          cfg.wm_samples,
          [&](size_t i) {
            std::optional<RollbackConfig> rb;
            if (rollback)
              rb = RollbackConfig{cfg.rollback_q, cfg.rollback_max};
            try {
              WatermarkResult wr =
                  embed_watermark(*lm, tk, prompts[i], sc, cfg.wm_tokens, rb,
                                  derive_seed(pos_seed, i));
              texts[i] = wr.text;
              times[i] = wr.runtime_seconds;
              rb_counts[i] = wr.rollbacks;
            } catch (const RollbackBudgetError&) {
              failed[i] = 1;
            }
          },
          cfg.threads);

      for (double eps : cfg.epsilons) {
        WatermarkCell cell;
        cell.scheme = scheme;
        cell.rollback = rollback;
        cell.epsilon = eps;
        cell.seed = pos_seed;
        std::vector<double> pos_strengths;
        std::vector<double> ppls;
        std::mutex mu;
        parallel_for(
            cfg.wm_samples,
            [&](size_t i) {
              if (failed[i]) return;
              std::string text = texts[i];
              if (eps > 0.0) {
                AttackConfig ac{eps, derive_seed(pos_seed, 0xA77 + i)};
                text = replacement_attack(ac, *lm, tk, text, prompts[i]).text;
              }
              double s =
                  strength(score_text(sc, tk, text, prompts[i]), sc);
              double ppl = eps == 0.0
                               ? perplexity(*lm, tk, text, prompts[i]).ppl
                               : 0.0;
              std::lock_guard<std::mutex> lock(mu);
              pos_strengths.push_back(s);
              if (eps == 0.0) ppls.push_back(ppl);
            },
            cfg.threads);
        cell.samples = pos_strengths.size();
        cell.strength_mean = mean(pos_strengths);
        cell.auroc = auroc(pos_strengths, neg_strengths);
        cell.mean_ppl = finite_mean(ppls);
        double tsum = 0.0;
        int rbsum = 0;
        for (size_t i = 0; i < cfg.wm_samples; ++i) {
          tsum += times[i];
          rbsum += rb_counts[i];
        }
        cell.mean_time = tsum / double(cfg.wm_samples);
        cell.rollbacks_total = rbsum;
        report.watermark_cells.push_back(std::move(cell));
      }
    }
  }

  // Observation-period calibration: persistence of transient mismatch under
  // plain generation.
  {
    uint64_t q_seed = derive_seed(cfg.seed, 0xCA11);
    size_t samples = std::min<size_t>(cfg.wm_samples, 200);
    std::vector<std::string> prompts = fixtures::prompts_from_corpus(
        corpus, samples, cfg.prompt_by_words, cfg.prompt_units, q_seed);
    std::vector<GenerationTrace> traces(samples);
    parallel_for(
        samples,
        [&](size_t i) {
          traces[i] = trace_generation(tk, *lm, prompts[i], cfg.wm_tokens, 1,
                                       false, derive_seed(q_seed, i));
        },
        cfg.threads);
    RateAggregates rates = aggregate_rates(traces, cfg.top_m);
    report.q_calibration = rates.persistence_histogram;
  }

  report.runtime_seconds = elapsed_since(t0);
  return report;
}

// --- report output ----------------------------------------------------------------

std::string Report::to_json() const {
  ordered_json j;
  j["experiment"] = experiment;
  j["config"] = json::parse(config_json);
  j["runtime_seconds"] = runtime_seconds;
  if (!investigate_cells.empty()) {
    auto& cells = j["cells"] = ordered_json::array();
    for (const auto& c : investigate_cells) {
      ordered_json jc;
      jc["length"] = c.length;
      jc["samples"] = c.samples;
      jc["seed"] = c.seed;
      jc["rates"] = json::parse(rates_to_json(c.rates));
      jc["runtime_seconds"] = c.runtime_seconds;
      cells.push_back(std::move(jc));
    }
  }
  if (!stego_cells.empty()) {
    auto& cells = j["cells"] = ordered_json::array();
    for (const auto& c : stego_cells) {
      cells.push_back({{"filter", filter_to_string(c.filter)},
                       {"codec", codec_to_string(c.codec)},
                       {"top_k", c.top_k},
                       {"samples", c.samples},
                       {"extraction_errors", c.extraction_errors},
                       {"hard_failures", c.hard_failures},
                       {"mean_bpt", c.mean_bpt},
                       {"mean_ppl", c.mean_ppl},
                       {"mean_kld", c.mean_kld},
                       {"mean_time", c.mean_time},
                       {"seed", c.seed}});
    }
    auto& buckets = j["buckets"] = ordered_json::array();
    for (const auto& b : stego_buckets) {
      ordered_json jb;
      jb["filter"] = filter_to_string(b.filter);
      jb["codec"] = codec_to_string(b.codec);
      jb["bpt_lo"] = b.bpt_lo;
      jb["bpt_hi"] = b.bpt_hi;
      jb["samples"] = b.samples;
      jb["insufficient"] = b.insufficient;
      jb["mean_ppl"] = b.mean_ppl;
      jb["mean_kld"] = b.mean_kld;
      jb["mean_time"] = b.mean_time;
      jb["extraction_ok"] = b.extraction_ok;
      ordered_json prov = ordered_json::object();
      for (const auto& [k, n] : b.top_k_provenance)
        prov[std::to_string(k)] = n;
      jb["top_k_provenance"] = prov;
      buckets.push_back(std::move(jb));
    }
  }
  if (!watermark_cells.empty()) {
    auto& cells = j["cells"] = ordered_json::array();
    for (const auto& c : watermark_cells) {
      cells.push_back({{"scheme", scheme_to_string(c.scheme)},
                       {"variant", c.rollback ? "rollback" : "original"},
                       {"epsilon", c.epsilon},
                       {"samples", c.samples},
                       {"strength_mean", c.strength_mean},
                       {"auroc", c.auroc},
                       {"mean_ppl", c.mean_ppl},
                       {"mean_time", c.mean_time},
                       {"rollbacks_total", c.rollbacks_total},
                       {"seed", c.seed}});
    }
    ordered_json qcal = ordered_json::object();
    for (const auto& [n, f] : q_calibration)
      qcal[n == kNeverResolves ? "inf" : std::to_string(n)] = f;
    j["q_calibration"] = qcal;
  }
  return j.dump(2);
}

void Report::write_files(const std::filesystem::path& out_dir) const {
  std::filesystem::create_directories(out_dir);
  {
    std::ofstream out(out_dir / "report.json", std::ios::binary);
    out << to_json() << "\n";
  }
  if (!investigate_cells.empty()) {
    std::ofstream csv(out_dir / "investigate.csv", std::ios::binary);
    csv << "length,samples,text_level,token_level,candidate_number_ratio,"
           "candidate_prob_ratio,temporary_rate,it_events\n";
    for (const auto& c : investigate_cells) {
      csv << c.length << ',' << c.samples << ',' << c.rates.text_level << ','
          << c.rates.token_level << ',' << c.rates.candidate_number_ratio
          << ',' << c.rates.candidate_prob_ratio << ',';
      if (c.rates.temporary_rate)
        csv << *c.rates.temporary_rate;
      else
        csv << "N/A";
      csv << ',' << c.rates.it_events << "\n";
    }
    std::ofstream pcsv(out_dir / "persistence.csv", std::ios::binary);
    pcsv << "length,N,fraction\n";
    for (const auto& c : investigate_cells)
      for (const auto& [n, f] : c.rates.persistence_histogram)
        pcsv << c.length << ','
             << (n == kNeverResolves ? std::string("inf") : std::to_string(n))
             << ',' << f << "\n";
  }
  if (!stego_cells.empty()) {
    std::ofstream csv(out_dir / "stego_cells.csv", std::ios::binary);
    csv << "filter,codec,top_k,samples,extraction_errors,hard_failures,"
           "mean_bpt,mean_ppl,mean_kld,mean_time\n";
    for (const auto& c : stego_cells)
      csv << filter_to_string(c.filter) << ',' << codec_to_string(c.codec)
          << ',' << c.top_k << ',' << c.samples << ',' << c.extraction_errors
          << ',' << c.hard_failures << ',' << c.mean_bpt << ',' << c.mean_ppl
          << ',' << c.mean_kld << ',' << c.mean_time << "\n";
    std::ofstream bcsv(out_dir / "stego_buckets.csv", std::ios::binary);
    bcsv << "bucket,filter,codec,samples,mean_ppl,mean_kld,mean_time,"
            "extraction_ok\n";
    for (const auto& b : stego_buckets) {
      bcsv << b.bpt_lo << "-" << b.bpt_hi << ',' << filter_to_string(b.filter)
           << ',' << codec_to_string(b.codec) << ',';
      if (b.insufficient) {
        bcsv << b.samples << ",-,-,-,-\n";
      } else {
        bcsv << b.samples << ',' << b.mean_ppl << ',' << b.mean_kld << ','
             << b.mean_time << ',' << b.extraction_ok << "\n";
      }
    }
  }
  if (!watermark_cells.empty()) {
    std::ofstream csv(out_dir / "watermark.csv", std::ios::binary);
    csv << "scheme,variant,epsilon,samples,strength_mean,auroc,mean_ppl,"
           "mean_time,rollbacks_total\n";
    for (const auto& c : watermark_cells)
      csv << scheme_to_string(c.scheme) << ','
          << (c.rollback ? "rollback" : "original") << ',' << c.epsilon << ','
          << c.samples << ',' << c.strength_mean << ',' << c.auroc << ','
          << c.mean_ppl << ',' << c.mean_time << ',' << c.rollbacks_total
          << "\n";
    std::ofstream qcsv(out_dir / "q_calibration.csv", std::ios::binary);
    qcsv << "N,fraction\n";
    for (const auto& [n, f] : q_calibration)
      qcsv << (n == kNeverResolves ? std::string("inf") : std::to_string(n))
           << ',' << f << "\n";
  }
}

// --- fixture emission -----------------------------------------------------------

void write_fixture_set(const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  Tokenizer ambig = fixtures::ambiguous_tokenizer();
  Tokenizer transient = fixtures::transient_tokenizer();
  Tokenizer plain = fixtures::plain_tokenizer();
  ambig.save(dir / "ambig.tokenizer.json");
  transient.save(dir / "transient.tokenizer.json");
  plain.save(dir / "plain.tokenizer.json");

  std::string corpus = fixtures::fixture_corpus();
  {
    std::ofstream out(dir / "corpus.txt", std::ios::binary);
    out << corpus;
  }
  NGramLm ngram = fixtures::fixture_ngram(ambig);
  ngram.save(dir / "ngram.model.json");
  fixtures::fixture_hash(ambig).save(dir / "hash.model.json");
  fixtures::fixture_hash(plain).save(dir / "plain_hash.model.json");
  fixtures::fixture_hash(transient).save(dir / "transient_hash.model.json");
  NGramLm transient_ngram = NGramLm::train_text(
      transient, fixtures::fixture_corpus(2000, 7), 3, 0.0005);
  transient_ngram.save(dir / "transient_ngram.model.json");

  Tokenizer calib = fixtures::calibration_tokenizer();
  calib.save(dir / "calibration.tokenizer.json");
  {
    std::ofstream out(dir / "calibration_corpus.txt", std::ios::binary);
    out << fixtures::synthetic_corpus();
  }
  fixtures::fixture_hash(calib).save(dir / "calibration_hash.model.json");

  ExperimentConfig cfg;
  cfg.tokenizer_path = dir / "ambig.tokenizer.json";
  cfg.model_path = dir / "ngram.model.json";
  cfg.corpus_path = dir / "corpus.txt";
  cfg.out_dir = dir / "out";
  cfg.investigate_samples = 100;
  cfg.stego_samples = 50;
  cfg.wm_samples = 50;
  std::ofstream out(dir / "bench.config.json", std::ios::binary);
  out << cfg.to_json() << "\n";
}

}  // namespace stegomark
