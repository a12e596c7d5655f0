#include "stegomark/watermark.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "stegomark/errors.hpp"
#include "stegomark/session.hpp"
#include "stegomark/util.hpp"

namespace stegomark {

Scheme scheme_from_string(std::string_view name) {
  if (name == "lefthash") return Scheme::lefthash;
  if (name == "selfhash") return Scheme::selfhash;
  if (name == "unigram") return Scheme::unigram;
  if (name == "gumbel") return Scheme::gumbel;
  throw ParseError("unknown watermark scheme: " + std::string(name));
}

std::string scheme_to_string(Scheme s) {
  switch (s) {
    case Scheme::lefthash: return "lefthash";
    case Scheme::selfhash: return "selfhash";
    case Scheme::unigram: return "unigram";
    case Scheme::gumbel: return "gumbel";
  }
  return "?";
}

int SchemeConfig::effective_h() const {
  if (h >= 0) return kind == Scheme::unigram ? 0 : h;
  switch (kind) {
    case Scheme::lefthash: return 1;
    case Scheme::selfhash: return 4;
    case Scheme::unigram: return 0;
    case Scheme::gumbel: return 5;
  }
  return 0;
}

namespace {

uint64_t scheme_seed(const SchemeConfig& cfg, std::span<const int> context) {
  std::vector<int> material;
  material.reserve(context.size() + 1);
  material.push_back(int(cfg.kind));  // domains stay separate per scheme
  material.insert(material.end(), context.begin(), context.end());
  return keyed_hash(cfg.key, material);
}

}  // namespace

std::vector<uint8_t> green_vector(const SchemeConfig& cfg,
                                  std::span<const int> context) {
  size_t v = size_t(cfg.vocab_size);
  Rng rng(scheme_seed(cfg, cfg.kind == Scheme::unigram
                               ? std::span<const int>{}
                               : context));
  std::vector<int> perm(v);
  for (size_t i = 0; i < v; ++i) perm[i] = int(i);
  for (size_t i = v; i > 1; --i)
    std::swap(perm[i - 1], perm[rng.next_below(i)]);
  size_t greens = size_t(std::floor(cfg.gamma * double(v)));
  std::vector<uint8_t> vec(v, 0);
  for (size_t i = 0; i < greens; ++i) vec[size_t(perm[i])] = 1;
  return vec;
}

std::vector<double> gumbel_vector(const SchemeConfig& cfg,
                                  std::span<const int> context) {
  Rng rng(scheme_seed(cfg, context));
  std::vector<double> vec(size_t(cfg.vocab_size));
  for (auto& u : vec) u = rng.next_open_double();
  return vec;
}

namespace {

// One watermarked sampling step. `banned` may be empty.
int pick_token(const SchemeConfig& cfg, const LmDistribution& dist,
               std::span<const int> history, const std::set<int>& banned,
               Rng& rng, double* phi_out) {
  int h = cfg.effective_h();
  bool has_context = int(history.size()) >= h;
  std::span<const int> ctx =
      has_context ? history.subspan(history.size() - size_t(h))
                  : std::span<const int>{};

  if (cfg.kind == Scheme::gumbel) {
    if (!has_context) {
      // No watermark context yet: plain multinomial step.
      LmDistribution masked = dist;
      for (int id : banned) masked.probs[size_t(id)] = 0.0;
      if (phi_out) *phi_out = std::numeric_limits<double>::quiet_NaN();
      return multinomial_sample(masked, rng);
    }
    std::vector<double> u = gumbel_vector(cfg, ctx);
    int best = -1;
    double best_score = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < cfg.vocab_size; ++i) {
      if (banned.count(i)) continue;
      double p = dist.probs[size_t(i)];
      if (p <= 0.0) continue;
      double score = std::log(u[size_t(i)]) / p;
      if (score > best_score) {  // ties resolve to the lower id
        best_score = score;
        best = i;
      }
    }
    if (best < 0) throw NoConsistentContinuation("every token is banned");
    if (phi_out) *phi_out = -std::log(1.0 - u[size_t(best)]);
    return best;
  }

  LmDistribution biased = dist;
  std::vector<uint8_t> green;
  if (has_context || cfg.kind == Scheme::unigram) {
    green = green_vector(cfg, ctx);
    for (size_t i = 0; i < biased.logits.size(); ++i)
      biased.logits[i] += cfg.delta * double(green[i]);
  }
  // softmax over the biased logits, minus banned ids
  double mx = -std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < biased.logits.size(); ++i)
    if (!banned.count(int(i))) mx = std::max(mx, biased.logits[i]);
  double sum = 0.0;
  for (size_t i = 0; i < biased.logits.size(); ++i) {
    if (banned.count(int(i)) || dist.probs[i] <= 0.0) {
      biased.probs[i] = 0.0;
    } else {
      biased.probs[i] = std::exp(biased.logits[i] - mx);
      sum += biased.probs[i];
    }
  }
  if (sum <= 0.0) throw NoConsistentContinuation("every token is banned");
  for (auto& p : biased.probs) p /= sum;
  int id = multinomial_sample(biased, rng);
  if (phi_out)
    *phi_out = green.empty() ? std::numeric_limits<double>::quiet_NaN()
                             : double(green[size_t(id)]);
  return id;
}

}  // namespace

WatermarkResult embed_watermark(const LanguageModel& lm, const Tokenizer& tk,
                                std::string_view prompt,
                                const SchemeConfig& cfg, size_t t_target,
                                const std::optional<RollbackConfig>& rollback,
                                uint64_t seed) {
  if (cfg.vocab_size != lm.vocab_size())
    throw std::invalid_argument("scheme vocab_size does not match the model");
  auto t0 = std::chrono::steady_clock::now();

  GenerationSession session(tk, lm, prompt, seed,
                            /*track_consistency=*/rollback.has_value());
  WatermarkResult result;

  std::map<size_t, std::set<int>> bans;  // generated position -> banned ids
  static const std::set<int> kNoBans;
  std::optional<int> q_c;
  size_t offender_pos = 0;
  int offender_token = -1;

  // phi per generated position; rebuilt after rollbacks.
  std::vector<double> phis(t_target,
                           std::numeric_limits<double>::quiet_NaN());

  auto do_rollback = [&](const RollbackConfig& rb) {
    if (++result.rollbacks > rb.max_rollbacks)
      throw RollbackBudgetError("rollback budget exhausted",
                                session.continuation());
    ++result.rolled_back_episodes;
    session.truncate_generated(offender_pos);
    bans[offender_pos].insert(offender_token);
    q_c.reset();
  };

  for (;;) {
    size_t pos = session.generated_tokens();
    if (pos == t_target) {
      if (!rollback || session.currently_consistent()) break;
      // Inconsistency still pending at the end of generation is stable by
      // construction: nothing after it can resolve it.
      do_rollback(*rollback);
      continue;
    }

    LmDistribution dist = session.next_distribution();
    auto bans_it = bans.find(pos);
    double phi;
    int id = pick_token(cfg, dist, session.history(),
                        bans_it == bans.end() ? kNoBans : bans_it->second,
                        session.rng(), &phi);
    bool was_consistent = session.currently_consistent();
    session.append(id);
    phis[pos] = phi;

    if (rollback) {
      if (session.currently_consistent()) {
        if (q_c) ++result.transient_episodes;
        q_c.reset();
      } else {
        if (!q_c && was_consistent) {
          q_c = 0;
          offender_pos = pos;
          offender_token = id;
        }
        if (q_c) {
          if (*q_c < rollback->q) {
            ++*q_c;
          } else {
            do_rollback(*rollback);
          }
        }
      }
    }
  }

  result.text = session.continuation();
  result.tokens = session.generated_ids();
  for (size_t i = 0; i < result.tokens.size(); ++i) {
    if (!std::isnan(phis[i])) {
      result.trace.positions.push_back(i);
      result.trace.tokens.push_back(result.tokens[i]);
      result.trace.phis.push_back(phis[i]);
    }
  }
  result.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return result;
}

ScoreTrace score_text(const SchemeConfig& cfg, const Tokenizer& tk,
                      std::string_view text, std::string_view prompt) {
  std::string full(prompt);
  full += text;
  TokenSequence seq = tk.encode(full);

  size_t first_text = 0;
  while (first_text < seq.size() && seq.spans[first_text].end <= prompt.size())
    ++first_text;

  int h = cfg.effective_h();
  ScoreTrace trace;
  for (size_t i = std::max(first_text, size_t(h)); i < seq.size(); ++i) {
    std::span<const int> ctx(seq.ids.data() + i - size_t(h), size_t(h));
    double phi;
    if (cfg.kind == Scheme::gumbel) {
      std::vector<double> u = gumbel_vector(cfg, ctx);
      phi = -std::log(1.0 - u[size_t(seq.ids[i])]);
    } else {
      std::vector<uint8_t> green = green_vector(cfg, ctx);
      phi = double(green[size_t(seq.ids[i])]);
    }
    trace.positions.push_back(i);
    trace.tokens.push_back(seq.ids[i]);
    trace.phis.push_back(phi);
  }
  if (trace.phis.empty())
    throw std::invalid_argument("insufficient context: nothing to score");
  return trace;
}

double strength(const ScoreTrace& trace, const SchemeConfig& cfg) {
  double t = double(trace.scored());
  if (t < 1.0) throw std::invalid_argument("empty score trace");
  double sum = 0.0;
  for (double phi : trace.phis) sum += phi;
  if (cfg.kind == Scheme::gumbel) return sum / std::sqrt(t) - std::sqrt(t);
  return (sum - cfg.gamma * t) / std::sqrt(t * cfg.gamma * (1.0 - cfg.gamma));
}

void write_score_trace(const std::filesystem::path& path,
                       const ScoreTrace& trace) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot open for writing: " + path.string());
  for (size_t i = 0; i < trace.scored(); ++i) {
    nlohmann::ordered_json j;
    j["pos"] = trace.positions[i];
    j["token"] = trace.tokens[i];
    j["phi"] = trace.phis[i];
    out << j.dump() << "\n";
  }
}

ScoreTrace read_score_trace(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open score trace: " + path.string());
  ScoreTrace trace;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      nlohmann::json j = nlohmann::json::parse(line);
      trace.positions.push_back(j.at("pos").get<size_t>());
      trace.tokens.push_back(j.at("token").get<int>());
      trace.phis.push_back(j.at("phi").get<double>());
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("score trace line " + std::to_string(lineno) + ": " +
                       e.what());
    }
  }
  return trace;
}

}  // namespace stegomark
