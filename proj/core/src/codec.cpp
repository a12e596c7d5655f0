#include "stegomark/codec.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <stdexcept>

namespace stegomark {

PoolIntervals pool_intervals(const CandidatePool& pool, int freq_bits) {
  size_t k = pool.entries.size();
  if (k == 0) throw std::invalid_argument("empty candidate pool");
  uint64_t total = 1ull << freq_bits;
  if (total < k)
    throw std::invalid_argument("freq_bits too small for pool size");

  std::vector<uint64_t> counts(k);
  uint64_t sum = 0;
  for (size_t i = 0; i < k; ++i) {
    counts[i] = std::max<uint64_t>(
        1, uint64_t(std::floor(pool.entries[i].prob * double(total))));
    sum += counts[i];
  }
  // Settle rounding drift on the largest counts, keeping every count >= 1.
  while (sum != total) {
    size_t j = size_t(std::max_element(counts.begin(), counts.end()) -
                      counts.begin());
    if (sum < total) {
      counts[j] += total - sum;
      sum = total;
    } else {
      uint64_t take = std::min(counts[j] - 1, sum - total);
      if (take == 0) {
        // Largest is already 1, so all are 1 and sum == k <= total: cannot
        // happen with sum > total. Guard anyway.
        throw std::logic_error("interval normalization failed");
      }
      counts[j] -= take;
      sum -= take;
    }
  }

  PoolIntervals iv;
  iv.total = total;
  iv.cum.resize(k + 1);
  iv.cum[0] = 0;
  for (size_t i = 0; i < k; ++i) iv.cum[i + 1] = iv.cum[i] + counts[i];
  return iv;
}

// --- arithmetic ------------------------------------------------------------

namespace {
void check_precision(int precision) {
  if (precision < 16 || precision > 40)
    throw std::invalid_argument("arithmetic coder precision out of range");
}
}  // namespace

ArithmeticEncoder::ArithmeticEncoder(int precision) : precision_(precision) {
  check_precision(precision);
  low_ = 0;
  high_ = (1ull << precision_) - 1;
}

void ArithmeticEncoder::emit(int bit) {
  bits_.push_back(uint8_t(bit));
  for (; pending_ > 0; --pending_) bits_.push_back(uint8_t(!bit));
}

void ArithmeticEncoder::push(const PoolIntervals& iv, size_t index) {
  const uint64_t half = 1ull << (precision_ - 1);
  const uint64_t quarter = half >> 1;
  uint64_t range = high_ - low_ + 1;
  high_ = low_ + range * iv.cum[index + 1] / iv.total - 1;
  low_ = low_ + range * iv.cum[index] / iv.total;
  for (;;) {
    if (high_ < half) {
      emit(0);
    } else if (low_ >= half) {
      emit(1);
      low_ -= half;
      high_ -= half;
    } else if (low_ >= quarter && high_ < half + quarter) {
      ++pending_;
      low_ -= quarter;
      high_ -= quarter;
    } else {
      break;
    }
    low_ <<= 1;
    high_ = (high_ << 1) | 1;
  }
}

ArithmeticDecoder::ArithmeticDecoder(int precision, BitFeed feed)
    : precision_(precision), feed_(std::move(feed)) {
  check_precision(precision);
  low_ = 0;
  high_ = (1ull << precision_) - 1;
  value_ = 0;
  for (int i = 0; i < precision_; ++i)
    value_ = (value_ << 1) | uint64_t(feed_.next());
}

size_t ArithmeticDecoder::select(const PoolIntervals& iv) {
  const uint64_t half = 1ull << (precision_ - 1);
  const uint64_t quarter = half >> 1;
  uint64_t range = high_ - low_ + 1;
  uint64_t target = ((value_ - low_ + 1) * iv.total - 1) / range;
  size_t index =
      size_t(std::upper_bound(iv.cum.begin(), iv.cum.end(), target) -
             iv.cum.begin()) -
      1;
  high_ = low_ + range * iv.cum[index + 1] / iv.total - 1;
  low_ = low_ + range * iv.cum[index] / iv.total;
  for (;;) {
    if (high_ < half) {
      // E1
    } else if (low_ >= half) {
      low_ -= half;
      high_ -= half;
      value_ -= half;
    } else if (low_ >= quarter && high_ < half + quarter) {
      low_ -= quarter;
      high_ -= quarter;
      value_ -= quarter;
    } else {
      break;
    }
    low_ <<= 1;
    high_ = (high_ << 1) | 1;
    value_ = (value_ << 1) | uint64_t(feed_.next());
  }
  return index;
}

// --- huffman ------------------------------------------------------------------

HuffmanCode canonical_huffman(const CandidatePool& pool) {
  size_t k = pool.entries.size();
  if (k == 0) throw std::invalid_argument("empty candidate pool");
  HuffmanCode hc;
  hc.length.assign(k, 0);
  hc.code.assign(k, 0);
  if (k == 1) return hc;  // empty code, zero bits per token

  struct Node {
    double weight;
    size_t order;  // creation order for deterministic ties
    int left = -1, right = -1;
    size_t symbol = SIZE_MAX;
  };
  std::vector<Node> nodes;
  nodes.reserve(2 * k);
  auto cmp = [&](size_t a, size_t b) {
    if (nodes[a].weight != nodes[b].weight)
      return nodes[a].weight > nodes[b].weight;
    return nodes[a].order > nodes[b].order;
  };
  std::priority_queue<size_t, std::vector<size_t>, decltype(cmp)> heap(cmp);
  for (size_t i = 0; i < k; ++i) {
    nodes.push_back({pool.entries[i].prob, i, -1, -1, i});
    heap.push(i);
  }
  while (heap.size() > 1) {
    size_t a = heap.top();
    heap.pop();
    size_t b = heap.top();
    heap.pop();
    nodes.push_back({nodes[a].weight + nodes[b].weight, nodes.size(), int(a),
                     int(b), SIZE_MAX});
    heap.push(nodes.size() - 1);
  }

  // Depth-first depths become code lengths.
  std::vector<std::pair<size_t, uint32_t>> stack{{heap.top(), 0}};
  while (!stack.empty()) {
    auto [n, depth] = stack.back();
    stack.pop_back();
    if (nodes[n].symbol != SIZE_MAX) {
      hc.length[nodes[n].symbol] = depth;
      continue;
    }
    stack.push_back({size_t(nodes[n].left), depth + 1});
    stack.push_back({size_t(nodes[n].right), depth + 1});
  }

  // Canonical assignment in (length asc, pool index asc) order.
  std::vector<size_t> order(k);
  for (size_t i = 0; i < k; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (hc.length[a] != hc.length[b]) return hc.length[a] < hc.length[b];
    return a < b;
  });
  if (hc.length[order[k - 1]] > 62)
    throw std::length_error("huffman code deeper than 62 bits");
  uint64_t code = 0;
  uint32_t prev_len = hc.length[order[0]];
  for (size_t i = 0; i < k; ++i) {
    size_t sym = order[i];
    code <<= (hc.length[sym] - prev_len);
    hc.code[sym] = code;
    prev_len = hc.length[sym];
    ++code;
  }
  return hc;
}

size_t huffman_select(const HuffmanCode& hc, BitFeed& feed) {
  size_t k = hc.length.size();
  if (k == 1) return 0;
  uint64_t code = 0;
  uint32_t len = 0;
  for (;;) {
    code = (code << 1) | uint64_t(feed.next());
    ++len;
    for (size_t i = 0; i < k; ++i)
      if (hc.length[i] == len && hc.code[i] == code) return i;
    if (len > 62) throw std::logic_error("huffman walk exceeded code length");
  }
}

void huffman_emit(const HuffmanCode& hc, size_t index, Bits& out) {
  for (uint32_t b = hc.length[index]; b > 0; --b)
    out.push_back(uint8_t((hc.code[index] >> (b - 1)) & 1));
}

}  // namespace stegomark
