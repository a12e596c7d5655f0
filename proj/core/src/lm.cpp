#include "stegomark/lm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "stegomark/errors.hpp"

namespace stegomark {

namespace {

std::vector<double> softmax(const std::vector<double>& logits) {
  double mx = *std::max_element(logits.begin(), logits.end());
  std::vector<double> probs(logits.size());
  double sum = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) {
    probs[i] = std::exp(logits[i] - mx);
    sum += probs[i];
  }
  for (auto& p : probs) p /= sum;
  return probs;
}

}  // namespace

// --- NGramLm ---------------------------------------------------------------

NGramLm NGramLm::train(std::span<const int> tokens, int vocab_size, int n,
                       double alpha) {
  if (n < 1) throw std::invalid_argument("n must be >= 1");
  if (alpha <= 0.0) throw std::invalid_argument("alpha must be > 0");
  if (tokens.empty()) throw VocabError("empty corpus");
  NGramLm lm;
  lm.vocab_size_ = vocab_size;
  lm.n_ = n;
  lm.alpha_ = alpha;
  lm.orders_.resize(size_t(n));
  for (int k = 0; k < n; ++k) {
    auto& table = lm.orders_[size_t(k)];
    for (size_t i = size_t(k); i < tokens.size(); ++i) {
      std::vector<int> ctx(tokens.begin() + long(i) - k, tokens.begin() + long(i));
      ContextCounts& cc = table[ctx];
      ++cc.counts[tokens[i]];
      ++cc.total;
    }
  }
  return lm;
}

NGramLm NGramLm::train_text(const Tokenizer& tk, std::string_view corpus,
                            int n, double alpha) {
  if (n < 1) throw std::invalid_argument("n must be >= 1");
  if (alpha <= 0.0) throw std::invalid_argument("alpha must be > 0");
  NGramLm lm;
  lm.vocab_size_ = tk.vocab_size();
  lm.n_ = n;
  lm.alpha_ = alpha;
  lm.orders_.resize(size_t(n));
  std::istringstream in{std::string(corpus)};
  std::string line;
  bool any = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    TokenSequence seq = tk.encode(line);
    if (seq.empty()) continue;
    any = true;
    for (int k = 0; k < n; ++k) {
      auto& table = lm.orders_[size_t(k)];
      for (size_t i = size_t(k); i < seq.ids.size(); ++i) {
        std::vector<int> ctx(seq.ids.begin() + long(i) - k,
                             seq.ids.begin() + long(i));
        ContextCounts& cc = table[ctx];
        ++cc.counts[seq.ids[i]];
        ++cc.total;
      }
    }
  }
  if (!any) throw VocabError("empty corpus");
  return lm;
}

LmDistribution NGramLm::next_distribution(std::span<const int> history) const {
  const ContextCounts* cc = nullptr;
  for (int k = std::min<int>(n_ - 1, int(history.size())); k >= 0; --k) {
    std::vector<int> ctx(history.end() - k, history.end());
    auto it = orders_[size_t(k)].find(ctx);
    if (it != orders_[size_t(k)].end() && it->second.total > 0) {
      cc = &it->second;
      break;
    }
  }

  LmDistribution dist;
  dist.probs.assign(size_t(vocab_size_), 0.0);
  double denom =
      (cc ? double(cc->total) : 0.0) + alpha_ * double(vocab_size_);
  for (int i = 0; i < vocab_size_; ++i) dist.probs[size_t(i)] = alpha_ / denom;
  if (cc)
    for (const auto& [id, c] : cc->counts)
      dist.probs[size_t(id)] = (double(c) + alpha_) / denom;
  dist.logits.resize(dist.probs.size());
  for (size_t i = 0; i < dist.probs.size(); ++i)
    dist.logits[i] = std::log(dist.probs[i]);
  return dist;
}

std::string NGramLm::to_json_string() const {
  nlohmann::ordered_json j;
  j["kind"] = "ngram";
  j["version"] = 1;
  j["n"] = n_;
  j["alpha"] = alpha_;
  j["vocab_size"] = vocab_size_;
  auto& orders = j["orders"] = nlohmann::ordered_json::array();
  for (int k = 0; k < n_; ++k) {
    nlohmann::ordered_json jorder;
    jorder["k"] = k;
    auto& ctxs = jorder["contexts"] = nlohmann::ordered_json::array();
    for (const auto& [ctx, cc] : orders_[size_t(k)]) {
      nlohmann::ordered_json jc;
      jc["ctx"] = ctx;
      auto& counts = jc["counts"] = nlohmann::ordered_json::array();
      for (const auto& [id, c] : cc.counts) counts.push_back({id, c});
      ctxs.push_back(std::move(jc));
    }
    orders.push_back(std::move(jorder));
  }
  return j.dump() + "\n";
}

NGramLm NGramLm::from_json_string(std::string_view text) {
  NGramLm lm;
  try {
    nlohmann::json j = nlohmann::json::parse(text);
    if (j.at("kind").get<std::string>() != "ngram")
      throw ParseError("model file: not an ngram model");
    lm.n_ = j.at("n").get<int>();
    lm.alpha_ = j.at("alpha").get<double>();
    lm.vocab_size_ = j.at("vocab_size").get<int>();
    lm.orders_.resize(size_t(lm.n_));
    for (const auto& jorder : j.at("orders")) {
      int k = jorder.at("k").get<int>();
      if (k < 0 || k >= lm.n_) throw ParseError("model file: bad order index");
      auto& table = lm.orders_[size_t(k)];
      for (const auto& jc : jorder.at("contexts")) {
        std::vector<int> ctx = jc.at("ctx").get<std::vector<int>>();
        ContextCounts cc;
        for (const auto& pair : jc.at("counts")) {
          cc.counts[pair.at(0).get<int>()] = pair.at(1).get<uint64_t>();
          cc.total += pair.at(1).get<uint64_t>();
        }
        table[ctx] = std::move(cc);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("model file: ") + e.what());
  }
  return lm;
}

void NGramLm::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot open for writing: " + path.string());
  out << to_json_string();
}

NGramLm NGramLm::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open model file: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json_string(buf.str());
}

bool NGramLm::operator==(const NGramLm& other) const {
  return vocab_size_ == other.vocab_size_ && n_ == other.n_ &&
         alpha_ == other.alpha_ && orders_ == other.orders_;
}

// --- HashLm ---------------------------------------------------------------

HashLm::HashLm(int vocab_size, int context, std::string key,
               double concentration)
    : vocab_size_(vocab_size),
      context_(context),
      key_(std::move(key)),
      concentration_(concentration) {
  if (vocab_size < 1) throw std::invalid_argument("vocab_size must be >= 1");
  if (context < 0) throw std::invalid_argument("context must be >= 0");
  if (concentration < 0.0)
    throw std::invalid_argument("concentration must be >= 0");
}

LmDistribution HashLm::next_distribution(std::span<const int> history) const {
  size_t n = std::min<size_t>(size_t(context_), history.size());
  std::vector<int> ctx(history.end() - long(n), history.end());
  Rng rng(keyed_hash(key_, ctx));
  LmDistribution dist;
  dist.logits.resize(size_t(vocab_size_));
  for (auto& l : dist.logits) l = concentration_ * rng.next_double();
  if (concentration_ == 0.0) {
    dist.probs.assign(size_t(vocab_size_), 1.0 / double(vocab_size_));
  } else {
    dist.probs = softmax(dist.logits);
  }
  return dist;
}

void HashLm::save(const std::filesystem::path& path) const {
  nlohmann::ordered_json j;
  j["kind"] = "hash";
  j["version"] = 1;
  j["vocab_size"] = vocab_size_;
  j["context"] = context_;
  j["key"] = to_hex(key_);
  j["concentration"] = concentration_;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot open for writing: " + path.string());
  out << j.dump(2) << "\n";
}

HashLm HashLm::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open model file: " + path.string());
  try {
    nlohmann::json j = nlohmann::json::parse(in);
    if (j.at("kind").get<std::string>() != "hash")
      throw ParseError("model file: not a hash model");
    return HashLm(j.at("vocab_size").get<int>(), j.at("context").get<int>(),
                  from_hex(j.at("key").get<std::string>()),
                  j.at("concentration").get<double>());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("model file: ") + e.what());
  }
}

// --- pooling & sampling -----------------------------------------------------

CandidatePool top_k_pool(const LmDistribution& dist, const SamplingConfig& cfg) {
  if (cfg.top_k < 1) throw std::invalid_argument("top_k must be >= 1");
  if (cfg.top_k > int(dist.probs.size()))
    throw std::invalid_argument("top_k exceeds vocabulary size");
  if (cfg.temperature <= 0.0)
    throw std::invalid_argument("temperature must be > 0");

  std::vector<double> probs;
  const std::vector<double>* src = &dist.probs;
  if (cfg.temperature != 1.0) {
    std::vector<double> scaled(dist.logits.size());
    for (size_t i = 0; i < scaled.size(); ++i)
      scaled[i] = dist.logits[i] / cfg.temperature;
    probs = softmax(scaled);
    src = &probs;
  }

  std::vector<int> order(src->size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = int(i);
  auto cmp = [&](int a, int b) {
    double pa = (*src)[size_t(a)], pb = (*src)[size_t(b)];
    if (pa != pb) return pa > pb;
    return a < b;
  };
  std::nth_element(order.begin(), order.begin() + cfg.top_k - 1, order.end(),
                   cmp);
  order.resize(size_t(cfg.top_k));
  std::sort(order.begin(), order.end(), cmp);

  CandidatePool pool;
  pool.entries.reserve(order.size());
  double mass = 0.0;
  for (int id : order) mass += (*src)[size_t(id)];
  for (int id : order)
    pool.entries.push_back({id, (*src)[size_t(id)] / mass});
  return pool;
}

int multinomial_sample(const LmDistribution& dist, Rng& rng) {
  double r = rng.next_double();
  double cum = 0.0;
  int last_nonzero = 0;
  for (size_t i = 0; i < dist.probs.size(); ++i) {
    if (dist.probs[i] <= 0.0) continue;
    last_nonzero = int(i);
    cum += dist.probs[i];
    if (r < cum) return int(i);
  }
  return last_nonzero;
}

int sample_from_pool(const CandidatePool& pool, Rng& rng) {
  // id-ascending cumulative order, independent of the stored pool order
  std::vector<const PoolItem*> by_id;
  by_id.reserve(pool.entries.size());
  for (const auto& e : pool.entries) by_id.push_back(&e);
  std::sort(by_id.begin(), by_id.end(),
            [](const PoolItem* a, const PoolItem* b) { return a->id < b->id; });
  double r = rng.next_double();
  double cum = 0.0;
  int last = by_id.empty() ? 0 : by_id.back()->id;
  for (const PoolItem* e : by_id) {
    cum += e->prob;
    if (r < cum) return e->id;
  }
  return last;
}

double entropy_bits(const LmDistribution& dist) {
  double h = 0.0;
  for (double p : dist.probs)
    if (p > 0.0) h -= p * std::log2(p);
  return h;
}

PerplexityResult perplexity(const LanguageModel& lm, const Tokenizer& tk,
                            std::string_view text, std::string_view prompt,
                            bool condition_on_prompt) {
  std::string full(prompt);
  full += text;
  TokenSequence seq = tk.encode(full);

  size_t first_scored = 0;
  if (condition_on_prompt && !prompt.empty()) {
    while (first_scored < seq.size() &&
           seq.spans[first_scored].end <= prompt.size())
      ++first_scored;
  }

  PerplexityResult result;
  double nll = 0.0;
  for (size_t i = first_scored; i < seq.size(); ++i) {
    LmDistribution dist = lm.next_distribution(
        std::span<const int>(seq.ids.data(), i));
    double p = dist.probs[size_t(seq.ids[i])];
    ++result.tokens;
    if (p <= 0.0) {
      result.zero_prob_position = i;
      result.ppl = std::numeric_limits<double>::infinity();
      return result;
    }
    nll -= std::log(p);
  }
  result.ppl = result.tokens ? std::exp(nll / double(result.tokens)) : 1.0;
  return result;
}

}  // namespace stegomark
