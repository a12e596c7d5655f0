#include "stegomark/util.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <numeric>
#include <thread>

#include "stegomark/errors.hpp"

namespace stegomark {

static int hex_digit(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

std::string to_hex(std::string_view bytes) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (unsigned char b : bytes) {
    out.push_back(digits[b >> 4]);
    out.push_back(digits[b & 0xF]);
  }
  return out;
}

std::string from_hex(std::string_view hex) {
  if (hex.size() % 2 != 0) throw ParseError("hex string has odd length");
  std::string out;
  out.reserve(hex.size() / 2);
  for (size_t i = 0; i < hex.size(); i += 2) {
    int hi = hex_digit(hex[i]);
    int lo = hex_digit(hex[i + 1]);
    if (hi < 0 || lo < 0)
      throw ParseError("invalid hex digit at offset " + std::to_string(i));
    out.push_back(static_cast<char>((hi << 4) | lo));
  }
  return out;
}

Bits bits_from_bytes(std::string_view bytes) {
  Bits bits;
  bits.reserve(bytes.size() * 8);
  for (unsigned char b : bytes)
    for (int i = 7; i >= 0; --i) bits.push_back((b >> i) & 1);
  return bits;
}

std::string bytes_from_bits(const Bits& bits) {
  std::string out((bits.size() + 7) / 8, '\0');
  for (size_t i = 0; i < bits.size(); ++i)
    if (bits[i]) out[i / 8] |= static_cast<char>(0x80 >> (i % 8));
  return out;
}

Bits random_bits(size_t n, uint64_t seed) {
  Rng rng(seed);
  Bits bits(n);
  for (auto& b : bits) b = static_cast<uint8_t>(rng.next_u64() & 1);
  return bits;
}

uint64_t splitmix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

uint64_t keyed_hash(std::string_view key, const std::vector<int>& context) {
  uint64_t h = splitmix64(0x5B1EC0DE ^ (static_cast<uint64_t>(key.size()) << 32));
  uint64_t word = 0;
  int filled = 0;
  for (unsigned char b : key) {
    word |= static_cast<uint64_t>(b) << (8 * filled);
    if (++filled == 8) {
      h = splitmix64(h ^ word);
      word = 0;
      filled = 0;
    }
  }
  if (filled > 0) h = splitmix64(h ^ word ^ (0xA5ull << 56));
  for (int id : context)
    h = splitmix64(h ^ (static_cast<uint64_t>(static_cast<uint32_t>(id)) + 1));
  return h;
}

void parallel_for(size_t n, const std::function<void(size_t)>& fn,
                  unsigned threads) {
  if (n == 0) return;
  unsigned hw = std::thread::hardware_concurrency();
  if (threads == 0) threads = hw > 0 ? hw : 4;
  threads = static_cast<unsigned>(std::min<size_t>(threads, n));
  if (threads <= 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::vector<std::thread> workers;
  workers.reserve(threads);
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mu;
  for (unsigned t = 0; t < threads; ++t) {
    workers.emplace_back([&] {
      for (;;) {
        size_t i = next.fetch_add(1);
        if (i >= n || failed.load()) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mu);
          if (!first_error) first_error = std::current_exception();
          failed.store(true);
          return;
        }
      }
    });
  }
  for (auto& w : workers) w.join();
  if (first_error) std::rethrow_exception(first_error);
}

double mean(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  return std::accumulate(xs.begin(), xs.end(), 0.0) / double(xs.size());
}

double sample_variance(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  double m = mean(xs);
  double acc = 0.0;
  for (double x : xs) acc += (x - m) * (x - m);
  return acc / double(xs.size() - 1);
}

double auroc(const std::vector<double>& positives,
             const std::vector<double>& negatives) {
  // Average-rank formulation; equivalent to pair counting with 0.5 per tie.
  struct Item {
    double score;
    bool positive;
  };
  std::vector<Item> all;
  all.reserve(positives.size() + negatives.size());
  for (double s : positives) all.push_back({s, true});
  for (double s : negatives) all.push_back({s, false});
  std::sort(all.begin(), all.end(),
            [](const Item& a, const Item& b) { return a.score < b.score; });
  double rank_sum_pos = 0.0;
  size_t i = 0;
  while (i < all.size()) {
    size_t j = i;
    while (j < all.size() && all[j].score == all[i].score) ++j;
    double avg_rank = (double(i + 1) + double(j)) / 2.0;  // 1-based ranks
    for (size_t k = i; k < j; ++k)
      if (all[k].positive) rank_sum_pos += avg_rank;
    i = j;
  }
  double np = double(positives.size());
  double nn = double(negatives.size());
  if (np == 0 || nn == 0) return 0.5;
  return (rank_sum_pos - np * (np + 1) / 2.0) / (np * nn);
}

}  // namespace stegomark
