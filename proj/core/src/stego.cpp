#include "stegomark/stego.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <unordered_map>

#include <json.hpp>

#include "stegomark/errors.hpp"

namespace stegomark {

SecretMessage SecretMessage::from_hex(std::string_view hex) {
  return SecretMessage{bits_from_bytes(stegomark::from_hex(hex))};
}

std::string SecretMessage::to_hex() const {
  return stegomark::to_hex(bytes_from_bits(bits));
}

// --- filters -----------------------------------------------------------------

namespace {

CandidatePool renormalize(std::vector<PoolItem> kept) {
  double mass = 0.0;
  for (const auto& e : kept) mass += e.prob;
  for (auto& e : kept) e.prob /= mass;
  return CandidatePool{std::move(kept)};
}

int freq_bits_for(int precision) { return std::min(16, precision - 2); }

}  // namespace

CandidatePool filter_stepwise(const GenerationSession& session,
                              const CandidatePool& pool,
                              const LmDistribution& full_dist) {
  std::vector<PoolItem> kept;
  kept.reserve(pool.entries.size());
  for (const auto& e : pool.entries)
    if (!session.candidate_breaks_consistency(e.id)) kept.push_back(e);
  if (!kept.empty()) return renormalize(std::move(kept));

  // Every pool candidate would break the round trip: fall back to the best
  // consistent token outside the pool so generation can continue.
  std::vector<int> order(full_dist.probs.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = int(i);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    double pa = full_dist.probs[size_t(a)], pb = full_dist.probs[size_t(b)];
    if (pa != pb) return pa > pb;
    return a < b;
  });
  std::unordered_map<int, bool> in_pool;
  for (const auto& e : pool.entries) in_pool[e.id] = true;
  for (int id : order) {
    if (in_pool.count(id)) continue;
    if (!session.candidate_breaks_consistency(id))
      return CandidatePool{{PoolItem{id, 1.0}}};
  }
  throw NoConsistentContinuation("no consistent continuation");
}

CandidatePool filter_basic(const Tokenizer& tk, const CandidatePool& pool) {
  // Sort surfaces; a strict prefix is always immediately followed by one of
  // its extensions in sorted order.
  std::vector<size_t> order;
  order.reserve(pool.entries.size());
  for (size_t i = 0; i < pool.entries.size(); ++i)
    if (!tk.is_special(pool.entries[i].id) &&
        !tk.render_unstable(pool.entries[i].id))
      order.push_back(i);
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return tk.surface(pool.entries[a].id) < tk.surface(pool.entries[b].id);
  });
  std::vector<bool> drop(pool.entries.size(), false);
  for (size_t i = 0; i + 1 < order.size(); ++i) {
    const std::string& s = tk.surface(pool.entries[order[i]].id);
    const std::string& t = tk.surface(pool.entries[order[i + 1]].id);
    if (t.size() > s.size() && t.compare(0, s.size(), s) == 0)
      drop[order[i]] = true;
  }
  std::vector<PoolItem> kept;
  for (size_t i = 0; i < pool.entries.size(); ++i)
    if (!tk.is_special(pool.entries[i].id) &&
        !tk.render_unstable(pool.entries[i].id) && !drop[i])
      kept.push_back(pool.entries[i]);
  if (kept.empty())
    throw NoConsistentContinuation("prefix filter removed the whole pool");
  return renormalize(std::move(kept));
}

namespace {

struct TrieNode {
  std::map<char, size_t> children;
  int pool_index = -1;  // terminal marker
};

struct MwisChoice {
  double weight = 0.0;
  std::vector<int> ids;  // sorted kept ids
};

bool better(const MwisChoice& a, const MwisChoice& b) {
  if (a.weight != b.weight) return a.weight > b.weight;
  return a.ids < b.ids;  // lexicographically smallest id set on ties
}

MwisChoice mwis_dp(const std::vector<TrieNode>& trie,
                   const CandidatePool& pool, size_t node) {
  MwisChoice take_children;
  for (const auto& entry : trie[node].children) {
    MwisChoice sub = mwis_dp(trie, pool, entry.second);
    take_children.weight += sub.weight;
    take_children.ids.insert(take_children.ids.end(), sub.ids.begin(),
                             sub.ids.end());
  }
  std::sort(take_children.ids.begin(), take_children.ids.end());
  if (trie[node].pool_index < 0) return take_children;

  MwisChoice take_self;
  take_self.weight = pool.entries[size_t(trie[node].pool_index)].prob;
  take_self.ids = {pool.entries[size_t(trie[node].pool_index)].id};
  if (take_children.ids.empty()) return take_self;
  return better(take_self, take_children) ? take_self : take_children;
}

}  // namespace

CandidatePool filter_mwis(const Tokenizer& tk, const CandidatePool& pool) {
  std::vector<TrieNode> trie(1);
  for (size_t i = 0; i < pool.entries.size(); ++i) {
    if (tk.is_special(pool.entries[i].id) ||
        tk.render_unstable(pool.entries[i].id))
      continue;
    const std::string& s = tk.surface(pool.entries[i].id);
    size_t node = 0;
    for (char c : s) {
      auto it = trie[node].children.find(c);
      if (it == trie[node].children.end()) {
        trie.push_back({});
        it = trie[node].children.emplace(c, trie.size() - 1).first;
      }
      node = it->second;
    }
    trie[node].pool_index = int(i);
  }

  MwisChoice best;
  for (const auto& entry : trie[0].children) {
    MwisChoice sub = mwis_dp(trie, pool, entry.second);
    best.weight += sub.weight;
    best.ids.insert(best.ids.end(), sub.ids.begin(), sub.ids.end());
  }
  if (best.ids.empty())
    throw NoConsistentContinuation("antichain filter removed the whole pool");

  std::vector<bool> keep_id(size_t(tk.vocab_size()), false);
  for (int id : best.ids) keep_id[size_t(id)] = true;
  std::vector<PoolItem> kept;
  for (const auto& e : pool.entries)
    if (keep_id[size_t(e.id)]) kept.push_back(e);
  return renormalize(std::move(kept));
}

double pool_kld(const CandidatePool& original, const CandidatePool& modified) {
  std::unordered_map<int, double> orig;
  for (const auto& e : original.entries) orig[e.id] = e.prob;
  double d = 0.0;
  for (const auto& e : modified.entries) {
    auto it = orig.find(e.id);
    if (it == orig.end())
      throw std::invalid_argument(
          "pool_kld: modified support exceeds original support");
    if (e.prob > 0.0) d += e.prob * std::log2(e.prob / it->second);
  }
  return d;
}

// --- embed / extract -------------------------------------------------------------

namespace {

CandidatePool apply_filter(const StegoConfig& cfg,
                           const GenerationSession& session,
                           const CandidatePool& pool,
                           const LmDistribution& dist) {
  switch (cfg.filter) {
    case Filter::none:
      return pool;
    case Filter::stepwise:
      return filter_stepwise(session, pool, dist);
    case Filter::basic:
      return filter_basic(session.tokenizer(), pool);
    case Filter::mwis:
      return filter_mwis(session.tokenizer(), pool);
  }
  throw std::logic_error("unknown filter");
}

double step_kld(const CandidatePool& pool, const CandidatePool& filtered) {
  try {
    return pool_kld(pool, filtered);
  } catch (const std::invalid_argument&) {
    // Fallback token outside the original pool: divergence is unbounded.
    return std::numeric_limits<double>::infinity();
  }
}

Bits payload_bits(const SecretMessage& message, const StegoConfig& cfg) {
  if (cfg.length_mode == LengthMode::out_of_band) return message.bits;
  if (message.bits.size() >= (1ull << kLengthPrefixBits))
    throw std::invalid_argument("message too long for the length prefix");
  Bits all;
  all.reserve(kLengthPrefixBits + message.bits.size());
  for (size_t i = 0; i < kLengthPrefixBits; ++i)
    all.push_back(
        uint8_t((message.bits.size() >> (kLengthPrefixBits - 1 - i)) & 1));
  all.insert(all.end(), message.bits.begin(), message.bits.end());
  return all;
}

}  // namespace

EmbedResult embed(const LanguageModel& lm, const Tokenizer& tk,
                  std::string_view prompt, const SecretMessage& message,
                  const StegoConfig& cfg) {
  if (cfg.precision < 16)
    throw std::invalid_argument("precision must be >= 16");
  auto t0 = std::chrono::steady_clock::now();

  GenerationSession session(tk, lm, prompt, cfg.sampling.seed);
  Bits payload = payload_bits(message, cfg);
  const size_t total_bits = payload.size();
  const int fb = freq_bits_for(cfg.precision);

  EmbedResult result;

  ArithmeticDecoder arith_pick(cfg.precision, BitFeed(payload));
  ArithmeticEncoder arith_shadow(cfg.precision);
  BitFeed huff_feed{std::move(payload)};

  auto committed = [&]() -> size_t {
    return cfg.codec == Codec::arithmetic ? arith_shadow.emitted()
                                          : huff_feed.consumed_real();
  };

  while (committed() < total_bits) {
    if (session.generated_tokens() >= cfg.max_tokens)
      throw BudgetError("token budget exhausted before message was embedded");
    LmDistribution dist = session.next_distribution();
    CandidatePool pool = top_k_pool(dist, cfg.sampling);
    CandidatePool filtered = apply_filter(cfg, session, pool, dist);
    result.kld_trace.push_back(step_kld(pool, filtered));

    size_t index;
    if (cfg.codec == Codec::arithmetic) {
      PoolIntervals iv = pool_intervals(filtered, fb);
      index = arith_pick.select(iv);
      arith_shadow.push(iv, index);
    } else {
      HuffmanCode hc = canonical_huffman(filtered);
      index = huffman_select(hc, huff_feed);
    }
    session.append(filtered.entries[index].id);
  }

  result.stegotext = session.continuation();
  result.tokens = session.generated_ids();
  result.token_count = result.tokens.size();
  result.bpt = result.token_count
                   ? double(message.bits.size()) / double(result.token_count)
                   : 0.0;
  result.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return result;
}

SecretMessage extract(const LanguageModel& lm, const Tokenizer& tk,
                      std::string_view prompt, std::string_view stegotext,
                      const StegoConfig& cfg,
                      std::optional<size_t> length_hint) {
  if (cfg.length_mode == LengthMode::out_of_band && !length_hint)
    throw std::invalid_argument(
        "out-of-band length mode requires a length hint");

  GenerationSession session(tk, lm, prompt, cfg.sampling.seed);
  const int fb = freq_bits_for(cfg.precision);
  ArithmeticEncoder arith(cfg.precision);
  Bits huff_bits;

  // With tokenizer-based extraction the observed tokens come from
  // retokenizing the full text; with the prefix-matching baselines they are
  // recovered by matching pool surfaces against the remaining text.
  const bool prefix_based =
      cfg.filter == Filter::basic || cfg.filter == Filter::mwis;

  std::vector<int> observed;
  if (!prefix_based) {
    std::string full(prompt);
    full += stegotext;
    TokenSequence seq = tk.encode(full);
    if (seq.ids.size() < session.prompt_tokens() ||
        !std::equal(session.history().begin(), session.history().end(),
                    seq.ids.begin()))
      throw DesyncError("prompt retokenized differently", 0);
    observed.assign(seq.ids.begin() + long(session.prompt_tokens()),
                    seq.ids.end());
  }

  std::string_view remaining = stegotext;

  // Bits known so far; in length-prefixed mode the target grows once the
  // prefix is decoded.
  size_t target = cfg.length_mode == LengthMode::out_of_band
                      ? *length_hint
                      : kLengthPrefixBits;
  bool prefix_parsed = cfg.length_mode == LengthMode::out_of_band;

  auto collected = [&]() -> size_t {
    return cfg.codec == Codec::arithmetic ? arith.emitted() : huff_bits.size();
  };
  auto current_bits = [&]() -> const Bits& {
    return cfg.codec == Codec::arithmetic ? arith.bits() : huff_bits;
  };

  size_t step = 0;
  for (;;) {
    if (!prefix_parsed && collected() >= kLengthPrefixBits) {
      size_t len = 0;
      for (size_t i = 0; i < kLengthPrefixBits; ++i)
        len = (len << 1) | current_bits()[i];
      target = kLengthPrefixBits + len;
      prefix_parsed = true;
    }
    if (prefix_parsed && collected() >= target) break;

    LmDistribution dist = session.next_distribution();
    CandidatePool pool = top_k_pool(dist, cfg.sampling);
    CandidatePool filtered = apply_filter(cfg, session, pool, dist);

    size_t index = SIZE_MAX;
    if (prefix_based) {
      if (remaining.empty())
        throw TruncationError("stegotext ended before the payload completed");
      for (size_t i = 0; i < filtered.entries.size(); ++i) {
        std::string r = tk.render(filtered.entries[i].id);
        if (!r.empty() && remaining.substr(0, r.size()) == r) {
          index = i;
          break;
        }
      }
      if (index == SIZE_MAX)
        throw DesyncError("no pool surface matches the remaining text", step);
      remaining.remove_prefix(tk.render(filtered.entries[index].id).size());
    } else {
      if (step >= observed.size())
        throw TruncationError("stegotext ended before the payload completed");
      int token = observed[step];
      for (size_t i = 0; i < filtered.entries.size(); ++i)
        if (filtered.entries[i].id == token) index = i;
      if (index == SIZE_MAX)
        throw DesyncError("observed token absent from the reconstructed pool",
                          step);
    }

    if (cfg.codec == Codec::arithmetic) {
      PoolIntervals iv = pool_intervals(filtered, fb);
      arith.push(iv, index);
    } else {
      HuffmanCode hc = canonical_huffman(filtered);
      huffman_emit(hc, index, huff_bits);
    }
    session.append(filtered.entries[index].id);
    ++step;
  }

  const Bits& bits = current_bits();
  size_t from = cfg.length_mode == LengthMode::out_of_band ? 0
                                                           : kLengthPrefixBits;
  SecretMessage out;
  out.bits.assign(bits.begin() + long(from), bits.begin() + long(target));
  return out;
}

std::string embed_result_to_json(const EmbedResult& r) {
  nlohmann::ordered_json j;
  j["stegotext"] = r.stegotext;
  j["tokens"] = r.tokens;
  j["token_count"] = r.token_count;
  j["bpt"] = r.bpt;
  double kld_sum = 0.0;
  size_t kld_n = 0;
  for (double k : r.kld_trace) {
    if (std::isfinite(k)) {
      kld_sum += k;
      ++kld_n;
    }
  }
  j["mean_step_kld"] = kld_n ? kld_sum / double(kld_n) : 0.0;
  j["kld_trace"] = r.kld_trace;
  j["runtime_seconds"] = r.runtime_seconds;
  return j.dump(2);
}

}  // namespace stegomark
