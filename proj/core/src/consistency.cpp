#include "stegomark/consistency.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "stegomark/errors.hpp"

namespace stegomark {

InconsistencyReport span_align(const Tokenizer& tk,
                               const TokenSequence& generated,
                               const TokenSequence& retokenized) {
  if (tk.decode(generated) != tk.decode(retokenized))
    throw ParseError("not comparable: sequences decode to different strings");

  using Key = std::tuple<int, size_t, size_t>;
  auto keys = [](const TokenSequence& s) {
    std::set<Key> out;
    for (size_t i = 0; i < s.size(); ++i)
      out.insert({s.ids[i], s.spans[i].begin, s.spans[i].end});
    return out;
  };
  std::set<Key> gen_keys = keys(generated);
  std::set<Key> ret_keys = keys(retokenized);

  InconsistencyReport report;
  report.consistent = (generated == retokenized);
  if (report.consistent) return report;
  for (size_t i = 0; i < generated.size(); ++i) {
    Key k{generated.ids[i], generated.spans[i].begin, generated.spans[i].end};
    if (!ret_keys.count(k)) report.i_sit.push_back(i);
  }
  for (size_t j = 0; j < retokenized.size(); ++j) {
    Key k{retokenized.ids[j], retokenized.spans[j].begin,
          retokenized.spans[j].end};
    if (!gen_keys.count(k)) report.i_cit.push_back(j);
  }
  return report;
}

bool is_candidate_level_it(const Tokenizer& tk, std::span<const int> history,
                           int candidate) {
  std::vector<int> extended(history.begin(), history.end());
  extended.push_back(candidate);
  std::string text = tk.decode(extended);
  thread_local std::vector<int> retok;
  tk.encode_ids(text, retok);
  return retok != extended;
}

bool is_candidate_level_it_windowed(const Tokenizer& tk,
                                    std::string_view history_text,
                                    std::span<const int> history_ids,
                                    std::span<const Span> history_spans,
                                    int candidate) {
  thread_local std::string window_text;
  thread_local std::vector<int> actual;

  // Words re-encode independently and everything before the final word is
  // already known consistent, so the check only needs to re-encode the last
  // word of the extended text. A surface carries the marker only as its
  // first byte, so the candidate either starts that word or extends it.
  bool special = tk.is_special(candidate);
  const std::string* cand_surface = special ? nullptr : &tk.surface(candidate);
  bool starts_word =
      cand_surface && static_cast<uint8_t>((*cand_surface)[0]) == tk.marker();

  size_t anchor = history_text.size();
  if (!starts_word) {
    anchor = 0;
    for (size_t p = history_text.size(); p > 0; --p) {
      if (history_text[p - 1] == ' ') {
        anchor = p - 1;
        break;
      }
    }
  }

  window_text.assign(history_text.substr(anchor));
  if (cand_surface) {
    size_t at = window_text.size();
    window_text += *cand_surface;
    for (size_t i = at; i < window_text.size(); ++i)
      if (static_cast<uint8_t>(window_text[i]) == tk.marker())
        window_text[i] = ' ';
  }
  tk.encode_ids(window_text, actual);

  // Expected: history tokens at or after the anchor, then the candidate.
  size_t first = history_ids.size();
  while (first > 0 && history_spans[first - 1].begin >= anchor) --first;
  size_t expected_n = history_ids.size() - first + 1;
  if (actual.size() != expected_n) return true;
  for (size_t i = first; i < history_ids.size(); ++i)
    if (actual[i - first] != history_ids[i]) return true;
  return actual.back() != candidate;
}

bool roundtrip_consistent(const Tokenizer& tk, std::span<const int> ids) {
  thread_local std::vector<int> retok;
  tk.encode_ids(tk.decode(ids), retok);
  if (retok.size() != ids.size()) return false;
  return std::equal(ids.begin(), ids.end(), retok.begin());
}

bool roundtrip_consistent(const Tokenizer& tk, const TokenSequence& seq) {
  TokenSequence retok = tk.encode(tk.decode(seq));
  return retok.ids == seq.ids && retok.spans == seq.spans;
}

RateAggregates aggregate_rates(std::span<const GenerationTrace> traces,
                               int top_m) {
  if (traces.empty()) throw std::invalid_argument("empty trace list");

  RateAggregates out;
  out.traces = traces.size();

  size_t inconsistent_texts = 0;
  double token_ratio_sum = 0.0;
  uint64_t pool_tokens = 0, pool_its = 0;
  double pool_mass = 0.0, it_mass = 0.0;
  size_t events = 0, temporary = 0;
  std::map<int64_t, size_t> persist;

  for (const GenerationTrace& tr : traces) {
    if (!tr.final_consistent) ++inconsistent_texts;
    size_t denom = tr.generated_len + tr.retokenized_len;
    if (denom > 0)
      token_ratio_sum += double(tr.i_sit + tr.i_cit) / double(denom);

    for (size_t t = 0; t < tr.steps.size(); ++t) {
      bool prefix_ti = t > 0 && tr.steps[t - 1].ti_now;
      if (prefix_ti) continue;  // scenario already inconsistent: excluded

      const StepRecord& step = tr.steps[t];
      size_t m = std::min<size_t>(step.pool.size(), size_t(top_m));
      for (size_t i = 0; i < m; ++i) {
        ++pool_tokens;
        pool_mass += step.pool[i].p;
        if (step.pool[i].it_flag) {
          ++pool_its;
          it_mass += step.pool[i].p;
        }
      }

      // An emission event: consistent prefix, emitted token broke the round
      // trip (so ti_now is set at this step).
      if (step.ti_now) {
        ++events;
        int64_t n = kNeverResolves;
        for (size_t u = t + 1; u < tr.steps.size(); ++u) {
          if (!tr.steps[u].ti_now) {
            n = int64_t(u - t);
            break;
          }
        }
        ++persist[n];
        if (n != kNeverResolves) ++temporary;
      }
    }
  }

  out.text_level = double(inconsistent_texts) / double(traces.size());
  out.token_level = token_ratio_sum / double(traces.size());
  out.candidate_number_ratio =
      pool_tokens ? double(pool_its) / double(pool_tokens) : 0.0;
  out.candidate_prob_ratio = pool_mass > 0.0 ? it_mass / pool_mass : 0.0;
  out.it_events = events;
  if (events > 0) {
    out.temporary_rate = double(temporary) / double(events);
    for (const auto& [n, c] : persist)
      out.persistence_histogram[n] = double(c) / double(events);
  }
  return out;
}

void write_trace_steps(const std::filesystem::path& path,
                       const GenerationTrace& trace) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot open for writing: " + path.string());
  for (size_t t = 0; t < trace.steps.size(); ++t) {
    const StepRecord& s = trace.steps[t];
    nlohmann::ordered_json j;
    j["step"] = t;
    auto& pool = j["pool"] = nlohmann::ordered_json::array();
    for (const PoolRecord& e : s.pool)
      pool.push_back({{"id", e.id}, {"p", e.p}, {"it_flag", e.it_flag}});
    j["emitted"] = s.emitted;
    j["ti_now"] = s.ti_now;
    out << j.dump() << "\n";
  }
}

std::vector<StepRecord> read_trace_steps(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open trace file: " + path.string());
  std::vector<StepRecord> steps;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      nlohmann::json j = nlohmann::json::parse(line);
      StepRecord s;
      for (const auto& e : j.at("pool"))
        s.pool.push_back({e.at("id").get<int>(), e.at("p").get<double>(),
                          e.at("it_flag").get<bool>()});
      s.emitted = j.at("emitted").get<int>();
      s.ti_now = j.at("ti_now").get<bool>();
      steps.push_back(std::move(s));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("trace file line " + std::to_string(lineno) + ": " +
                       e.what());
    }
  }
  return steps;
}

std::string rates_to_json(const RateAggregates& r) {
  nlohmann::ordered_json j;
  j["text_level"] = r.text_level;
  j["token_level"] = r.token_level;
  j["candidate_number_ratio"] = r.candidate_number_ratio;
  j["candidate_prob_ratio"] = r.candidate_prob_ratio;
  if (r.temporary_rate)
    j["temporary_rate"] = *r.temporary_rate;
  else
    j["temporary_rate"] = "N/A";
  nlohmann::ordered_json hist = nlohmann::ordered_json::object();
  for (const auto& [n, f] : r.persistence_histogram)
    hist[n == kNeverResolves ? "inf" : std::to_string(n)] = f;
  j["persistence_histogram"] = hist;
  j["traces"] = r.traces;
  j["it_events"] = r.it_events;
  return j.dump(2);
}

}  // namespace stegomark
