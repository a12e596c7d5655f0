#include "stegomark/tokenizer.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include <json.hpp>

#include "stegomark/errors.hpp"
#include "stegomark/util.hpp"

namespace stegomark {

namespace {

// Splits transformed text (spaces already replaced by the marker byte) into
// words: a new word starts at every marker position. Returns [begin,end)
// offsets; empty input yields no words.
std::vector<std::pair<size_t, size_t>> split_words(std::string_view text,
                                                   uint8_t marker) {
  std::vector<std::pair<size_t, size_t>> words;
  if (text.empty()) return words;
  size_t start = 0;
  for (size_t i = 1; i < text.size(); ++i) {
    if (static_cast<uint8_t>(text[i]) == marker) {
      words.emplace_back(start, i);
      start = i;
    }
  }
  words.emplace_back(start, text.size());
  return words;
}

std::string transform_spaces(std::string_view text, uint8_t marker) {
  std::string out(text);
  for (auto& c : out)
    if (c == ' ') c = static_cast<char>(marker);
  return out;
}

}  // namespace

// --- Builder ---------------------------------------------------------------

Tokenizer::Builder::Builder(uint8_t marker) : marker_(marker) {}

std::string Tokenizer::Builder::internalize(std::string_view display) const {
  std::string raw(display);
  for (auto& c : raw)
    if (c == '_') c = static_cast<char>(marker_);
  return raw;
}

int Tokenizer::Builder::special(std::string_view surface) {
  std::string raw(surface);
  if (by_surface_.count(raw))
    throw ParseError("duplicate surface: " + raw);
  int id = static_cast<int>(surfaces_.size());
  surfaces_.push_back(raw);
  by_surface_[raw] = id;
  specials_.push_back(id);
  return id;
}

int Tokenizer::Builder::base(char byte) {
  std::string raw = internalize(std::string_view(&byte, 1));
  auto it = by_surface_.find(raw);
  if (it != by_surface_.end()) return it->second;
  int id = static_cast<int>(surfaces_.size());
  surfaces_.push_back(raw);
  by_surface_[raw] = id;
  return id;
}

void Tokenizer::Builder::bases(std::string_view bytes) {
  for (char b : bytes) base(b);
}

int Tokenizer::Builder::merge(std::string_view left, std::string_view right) {
  std::string lraw = internalize(left);
  std::string rraw = internalize(right);
  auto li = by_surface_.find(lraw);
  auto ri = by_surface_.find(rraw);
  if (li == by_surface_.end())
    throw ParseError("merge left operand unknown: " + std::string(left));
  if (ri == by_surface_.end())
    throw ParseError("merge right operand unknown: " + std::string(right));
  std::string merged_raw = lraw + rraw;
  if (by_surface_.count(merged_raw))
    throw ParseError("duplicate surface from merge: " + std::string(left) +
                     "+" + std::string(right));
  int id = static_cast<int>(surfaces_.size());
  surfaces_.push_back(merged_raw);
  by_surface_[merged_raw] = id;
  merges_.push_back({li->second, ri->second, id});
  return id;
}

void Tokenizer::Builder::fragments(char tail, char replacement,
                                   std::vector<std::pair<char, int>> leads) {
  FragmentSpec spec;
  spec.tail = static_cast<uint8_t>(tail);
  spec.replacement = static_cast<uint8_t>(replacement);
  for (auto [lead, count] : leads)
    spec.leads.emplace_back(static_cast<uint8_t>(lead), count);
  fragments_ = std::move(spec);
}

Tokenizer Tokenizer::Builder::build() && {
  Tokenizer tk;
  tk.marker_ = marker_;
  tk.surfaces_ = std::move(surfaces_);
  tk.merges_ = std::move(merges_);
  tk.specials_.insert(specials_.begin(), specials_.end());
  tk.fragments_ = std::move(fragments_);
  tk.rebuild_index();
  return tk;
}

// --- validation / index ------------------------------------------------------

void Tokenizer::rebuild_index() {
  base_of_byte_.fill(-1);
  lead_tails_.fill(-1);
  merge_rank_.clear();
  by_surface_.clear();
  max_surface_len_ = 1;

  for (int id = 0; id < vocab_size(); ++id) {
    const std::string& s = surfaces_[size_t(id)];
    if (s.empty()) throw ParseError("empty surface for id " + std::to_string(id));
    if (!by_surface_.emplace(s, id).second)
      throw ParseError("duplicate surface for id " + std::to_string(id));
    max_surface_len_ = std::max(max_surface_len_, s.size());
    if (s.size() == 1 && !is_special(id))
      base_of_byte_[static_cast<uint8_t>(s[0])] = id;
  }
  int rank = 0;
  for (const Merge& m : merges_) {
    if (!valid_id(m.left) || !valid_id(m.right) || !valid_id(m.merged))
      throw ParseError("merge " + std::to_string(rank) +
                       " references unknown id");
    if (surfaces_[size_t(m.merged)] !=
        surfaces_[size_t(m.left)] + surfaces_[size_t(m.right)])
      throw ParseError("merge " + std::to_string(rank) +
                       " surface is not the concatenation of its parts");
    if (!merge_rank_.emplace(pair_key(m.left, m.right), rank).second)
      throw ParseError("duplicate merge rule at rank " + std::to_string(rank));
    ++rank;
  }
  for (int id : specials_)
    if (!valid_id(id)) throw ParseError("special id out of range");
  if (fragments_) {
    for (auto [lead, count] : fragments_->leads) {
      if (count < 1) throw ParseError("fragment lead needs at least one tail");
      if (lead == fragments_->tail || lead == fragments_->replacement)
        throw ParseError("fragment lead collides with tail or replacement");
      lead_tails_[lead] = count;
    }
  }
}

// --- encode / decode ---------------------------------------------------------

namespace {
thread_local std::string g_norm_buffer;
}  // namespace

// Applies merges to `syms` (a single word), lowest rank first and leftmost
// among equal-rank sites.
void Tokenizer::merge_word(std::vector<int>& syms, size_t word_begin) const {
  for (;;) {
    int best_rank = std::numeric_limits<int>::max();
    size_t best_pos = 0;
    for (size_t i = word_begin; i + 1 < syms.size(); ++i) {
      auto it = merge_rank_.find(pair_key(syms[i], syms[i + 1]));
      if (it != merge_rank_.end() && it->second < best_rank) {
        best_rank = it->second;
        best_pos = i;
      }
    }
    if (best_rank == std::numeric_limits<int>::max()) break;
    syms[best_pos] = merges_[size_t(best_rank)].merged;
    syms.erase(syms.begin() + long(best_pos) + 1);
  }
}

// Normalizes into `out`: spaces to marker, dangling fragment leads replaced.
void Tokenizer::normalize(std::string_view text, std::string& out) const {
  out.assign(text);
  for (auto& c : out)
    if (c == ' ') c = static_cast<char>(marker_);
  if (!fragments_) return;
  for (size_t i = 0; i < out.size(); ++i) {
    int tails = lead_tails_[static_cast<uint8_t>(out[i])];
    if (tails < 0) continue;
    bool complete = i + size_t(tails) < out.size();
    for (int t = 1; complete && t <= tails; ++t)
      complete = static_cast<uint8_t>(out[i + size_t(t)]) == fragments_->tail;
    if (!complete) out[i] = static_cast<char>(fragments_->replacement);
  }
}

void Tokenizer::encode_ids(std::string_view text, std::vector<int>& out) const {
  out.clear();
  if (text.empty()) return;
  std::string& norm = g_norm_buffer;
  normalize(text, norm);
  size_t word_begin = 0;  // index into `out` where the current word starts
  for (size_t i = 0; i < norm.size(); ++i) {
    uint8_t b = static_cast<uint8_t>(norm[i]);
    if (b == marker_ && i > 0) {
      merge_word(out, word_begin);
      word_begin = out.size();
    }
    int id = base_of_byte_[b];
    if (id < 0)
      throw EncodeError("unencodable byte at offset " + std::to_string(i), i);
    out.push_back(id);
  }
  merge_word(out, word_begin);
}

TokenSequence Tokenizer::encode(std::string_view text) const {
  TokenSequence seq;
  seq.source = SeqSource::retokenized;
  if (text.empty()) return seq;
  encode_ids(text, seq.ids);
  seq.spans.reserve(seq.ids.size());
  size_t pos = 0;
  for (int id : seq.ids) {
    size_t len = surfaces_[size_t(id)].size();
    seq.spans.push_back({pos, pos + len});
    pos += len;
  }
  return seq;
}

std::string Tokenizer::render(int id) const {
  std::string s = surfaces_.at(size_t(id));
  for (auto& c : s)
    if (static_cast<uint8_t>(c) == marker_) c = ' ';
  return s;
}

std::string Tokenizer::decode(std::span<const int> ids,
                              bool skip_specials) const {
  std::string out;
  for (size_t i = 0; i < ids.size(); ++i) {
    int id = ids[i];
    if (!valid_id(id))
      throw ParseError("unknown token id " + std::to_string(id) +
                       " at position " + std::to_string(i));
    if (skip_specials && is_special(id)) continue;
    out += render(id);
  }
  return fragment_fixup(out);
}

std::string Tokenizer::fragment_fixup(std::string_view rendered) const {
  std::string out(rendered);
  if (!fragments_) return out;
  for (size_t i = 0; i < out.size(); ++i) {
    int tails = lead_tails_[static_cast<uint8_t>(out[i])];
    if (tails < 0) continue;
    bool complete = i + size_t(tails) < out.size();
    for (int t = 1; complete && t <= tails; ++t)
      complete = static_cast<uint8_t>(out[i + size_t(t)]) == fragments_->tail;
    if (!complete) out[i] = static_cast<char>(fragments_->replacement);
  }
  return out;
}

std::string Tokenizer::decode(const TokenSequence& seq,
                              bool skip_specials) const {
  return decode(std::span<const int>(seq.ids), skip_specials);
}

std::optional<int> Tokenizer::id_of_surface(std::string_view raw) const {
  auto it = by_surface_.find(std::string(raw));
  if (it == by_surface_.end()) return std::nullopt;
  return it->second;
}

std::string Tokenizer::internalize(std::string_view display) const {
  std::string raw(display);
  for (auto& c : raw)
    if (c == '_') c = static_cast<char>(marker_);
  return raw;
}

std::string Tokenizer::display(std::string_view raw) const {
  std::string out(raw);
  for (auto& c : out)
    if (static_cast<uint8_t>(c) == marker_) c = '_';
  return out;
}

bool Tokenizer::operator==(const Tokenizer& other) const {
  return surfaces_ == other.surfaces_ && merges_ == other.merges_ &&
         specials_ == other.specials_ && marker_ == other.marker_ &&
         fragments_ == other.fragments_;
}

// --- training ----------------------------------------------------------------

Tokenizer Tokenizer::train(std::string_view corpus, int vocab_size,
                           const std::vector<std::string>& specials) {
  if (corpus.empty()) throw VocabError("empty corpus");

  // Words are collected per line so tokens never span line breaks.
  std::map<std::string, uint64_t> word_freq;
  std::string line;
  std::istringstream in{std::string(corpus)};
  std::array<bool, 256> byte_seen{};
  while (std::getline(in, line)) {
    std::string transformed = transform_spaces(line, kDefaultMarker);
    for (char c : transformed) byte_seen[static_cast<uint8_t>(c)] = true;
    for (auto [wb, we] : split_words(transformed, kDefaultMarker))
      if (we > wb) ++word_freq[transformed.substr(wb, we - wb)];
  }
  byte_seen[kDefaultMarker] = true;

  Tokenizer tk;
  tk.marker_ = kDefaultMarker;
  for (const std::string& s : specials) {
    int id = static_cast<int>(tk.surfaces_.size());
    tk.surfaces_.push_back(s);
    tk.specials_.insert(id);
  }
  std::array<int, 256> base_id{};
  base_id.fill(-1);
  for (int b = 0; b < 256; ++b) {
    if (!byte_seen[size_t(b)]) continue;
    base_id[size_t(b)] = static_cast<int>(tk.surfaces_.size());
    tk.surfaces_.push_back(std::string(1, static_cast<char>(b)));
  }
  if (vocab_size < static_cast<int>(tk.surfaces_.size()))
    throw VocabError("vocab too small");

  // Word types as symbol id lists, visited in deterministic (sorted) order.
  std::vector<std::pair<std::vector<int>, uint64_t>> words;
  words.reserve(word_freq.size());
  for (const auto& [w, f] : word_freq) {
    std::vector<int> ids;
    ids.reserve(w.size());
    for (char c : w) ids.push_back(base_id[static_cast<uint8_t>(c)]);
    words.emplace_back(std::move(ids), f);
  }

  while (static_cast<int>(tk.surfaces_.size()) < vocab_size) {
    std::map<std::pair<int, int>, uint64_t> pair_freq;
    for (const auto& [ids, f] : words)
      for (size_t i = 0; i + 1 < ids.size(); ++i)
        pair_freq[{ids[i], ids[i + 1]}] += f;
    // Highest frequency wins; ties go to the lexicographically smaller
    // (left surface, right surface) pair.
    uint64_t best_freq = 0;
    std::pair<int, int> best{-1, -1};
    for (const auto& [pr, f] : pair_freq) {
      if (f < best_freq) continue;
      if (f > best_freq) {
        best_freq = f;
        best = pr;
        continue;
      }
      auto key = [&](const std::pair<int, int>& p) {
        return std::make_pair(tk.surfaces_[size_t(p.first)],
                              tk.surfaces_[size_t(p.second)]);
      };
      if (key(pr) < key(best)) best = pr;
    }
    if (best_freq < 2) break;  // nothing left worth merging

    int merged_id = static_cast<int>(tk.surfaces_.size());
    std::string merged_surface =
        tk.surfaces_[size_t(best.first)] + tk.surfaces_[size_t(best.second)];
    // A surface reachable through two merge paths would collide; stop rather
    // than emit a duplicate.
    bool duplicate = false;
    for (const auto& s : tk.surfaces_)
      if (s == merged_surface) duplicate = true;
    if (duplicate) break;
    tk.surfaces_.push_back(merged_surface);
    tk.merges_.push_back({best.first, best.second, merged_id});

    for (auto& [ids, f] : words) {
      for (size_t i = 0; i + 1 < ids.size();) {
        if (ids[i] == best.first && ids[i + 1] == best.second) {
          ids[i] = merged_id;
          ids.erase(ids.begin() + static_cast<long>(i) + 1);
        } else {
          ++i;
        }
      }
    }
  }

  tk.rebuild_index();
  return tk;
}

// --- serialization ------------------------------------------------------------

std::string Tokenizer::to_json_string() const {
  nlohmann::ordered_json j;
  j["version"] = 1;
  j["marker"] = int(marker_);
  auto& vocab = j["vocab"] = nlohmann::ordered_json::array();
  for (int id = 0; id < vocab_size(); ++id) {
    vocab.push_back({{"id", id}, {"surface", to_hex(surfaces_[size_t(id)])}});
  }
  auto& merges = j["merges"] = nlohmann::ordered_json::array();
  for (const Merge& m : merges_)
    merges.push_back({m.left, m.right, m.merged});
  std::vector<int> sp(specials_.begin(), specials_.end());
  std::sort(sp.begin(), sp.end());
  j["specials"] = sp;
  if (fragments_) {
    nlohmann::ordered_json frag;
    frag["tail"] = int(fragments_->tail);
    frag["replacement"] = int(fragments_->replacement);
    auto& leads = frag["leads"] = nlohmann::ordered_json::array();
    for (auto [lead, count] : fragments_->leads)
      leads.push_back({int(lead), count});
    j["fragments"] = frag;
  }
  return j.dump(2) + "\n";
}

void Tokenizer::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot open for writing: " + path.string());
  out << to_json_string();
}

Tokenizer Tokenizer::from_json_string(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("tokenizer file: ") + e.what());
  }
  Tokenizer tk;
  try {
    if (j.at("version").get<int>() != 1)
      throw ParseError("tokenizer file: unsupported version");
    tk.marker_ = static_cast<uint8_t>(j.at("marker").get<int>());
    const auto& vocab = j.at("vocab");
    tk.surfaces_.resize(vocab.size());
    std::vector<bool> seen(vocab.size(), false);
    for (const auto& entry : vocab) {
      int id = entry.at("id").get<int>();
      if (id < 0 || id >= static_cast<int>(vocab.size()) || seen[size_t(id)])
        throw ParseError("tokenizer file: vocab ids must be dense and unique");
      seen[size_t(id)] = true;
      tk.surfaces_[size_t(id)] = from_hex(entry.at("surface").get<std::string>());
    }
    for (const auto& m : j.at("merges")) {
      if (!m.is_array() || m.size() != 3)
        throw ParseError("tokenizer file: merge entries must be triples");
      tk.merges_.push_back({m[0].get<int>(), m[1].get<int>(), m[2].get<int>()});
    }
    for (const auto& s : j.at("specials")) tk.specials_.insert(s.get<int>());
    if (j.contains("fragments")) {
      const auto& frag = j.at("fragments");
      FragmentSpec spec;
      spec.tail = static_cast<uint8_t>(frag.at("tail").get<int>());
      spec.replacement =
          static_cast<uint8_t>(frag.at("replacement").get<int>());
      for (const auto& lead : frag.at("leads"))
        spec.leads.emplace_back(
            static_cast<uint8_t>(lead.at(0).get<int>()), lead.at(1).get<int>());
      tk.fragments_ = std::move(spec);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("tokenizer file: ") + e.what());
  }
  tk.rebuild_index();
  return tk;
}

Tokenizer Tokenizer::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open tokenizer file: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json_string(buf.str());
}

}  // namespace stegomark
