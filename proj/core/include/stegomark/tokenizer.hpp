#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace stegomark {

// Half-open character interval over a decoded string. Zero-width spans are
// legal and used by special tokens that decoding skips.
struct Span {
  size_t begin = 0;
  size_t end = 0;
  bool operator==(const Span&) const = default;
};

enum class SeqSource { generated, retokenized };

struct TokenSequence {
  std::vector<int> ids;
  std::vector<Span> spans;
  SeqSource source = SeqSource::retokenized;

  size_t size() const { return ids.size(); }
  bool empty() const { return ids.empty(); }
  bool operator==(const TokenSequence& other) const {
    return ids == other.ids && spans == other.spans;
  }
};

// Subword tokenizer with an ordered merge table and a word-start marker byte.
//
// Encoding replaces each space with the marker byte, splits the text into
// words at marker positions, and applies merges within each word, lowest rank
// first and left-to-right among equal-rank sites. Decoding concatenates
// surfaces and renders the marker byte back as a space.
//
// A tokenizer may additionally declare fragment bytes: a lead byte that must
// be followed by a fixed number of tail bytes to render as itself; a dangling
// lead renders as the replacement byte instead. Emitting a lead makes the
// decoded text disagree with the token list until its tails arrive, which is
// how transient retokenization differences enter the fixtures. Plain
// tokenizer files load with no fragments.
class Tokenizer {
 public:
  struct Merge {
    int left = 0;
    int right = 0;
    int merged = 0;
    bool operator==(const Merge&) const = default;
  };

  struct FragmentSpec {
    uint8_t tail = 0;
    uint8_t replacement = 0;
    std::vector<std::pair<uint8_t, int>> leads;  // lead byte -> tail count
    bool operator==(const FragmentSpec&) const = default;
  };

  // Assembles hand-built tokenizers; validates the same invariants as load().
  class Builder {
   public:
    explicit Builder(uint8_t marker = kDefaultMarker);
    // `surface` uses '_' as a stand-in for the marker byte.
    int special(std::string_view surface);
    int base(char byte);
    void bases(std::string_view bytes);
    // Left/right given as display surfaces ('_' for marker); both must exist.
    int merge(std::string_view left, std::string_view right);
    void fragments(char tail, char replacement,
                   std::vector<std::pair<char, int>> leads);
    Tokenizer build() &&;

   private:
    friend class Tokenizer;
    uint8_t marker_;
    std::vector<std::string> surfaces_;
    std::vector<Merge> merges_;
    std::vector<int> specials_;
    std::optional<FragmentSpec> fragments_;
    std::unordered_map<std::string, int> by_surface_;
    std::string internalize(std::string_view display) const;
  };

  static constexpr uint8_t kDefaultMarker = 0x01;

  Tokenizer() = default;

  static Tokenizer train(std::string_view corpus, int vocab_size,
                         const std::vector<std::string>& specials);
  static Tokenizer load(const std::filesystem::path& path);
  static Tokenizer from_json_string(std::string_view text);
  void save(const std::filesystem::path& path) const;
  std::string to_json_string() const;

  TokenSequence encode(std::string_view text) const;
  std::string decode(std::span<const int> ids, bool skip_specials = true) const;
  std::string decode(const TokenSequence& seq, bool skip_specials = true) const;

  int vocab_size() const { return static_cast<int>(surfaces_.size()); }
  bool valid_id(int id) const {
    return id >= 0 && id < vocab_size();
  }
  const std::string& surface(int id) const { return surfaces_.at(size_t(id)); }
  bool is_special(int id) const { return specials_.count(id) > 0; }
  const std::unordered_set<int>& specials() const { return specials_; }
  uint8_t marker() const { return marker_; }
  const std::vector<Merge>& merges() const { return merges_; }
  size_t max_surface_len() const { return max_surface_len_; }
  bool has_fragments() const { return fragments_.has_value(); }
  const std::optional<FragmentSpec>& fragment_spec() const {
    return fragments_;
  }
  // True if the token's rendering depends on what follows it.
  bool render_unstable(int id) const {
    for (unsigned char b : surfaces_.at(size_t(id)))
      if (lead_tails_[b] >= 0) return true;
    return false;
  }

  // Marker byte rendered as a space.
  std::string render(int id) const;
  std::optional<int> id_of_surface(std::string_view raw) const;

  // Replaces every insufficiently tailed fragment lead with the replacement
  // byte. Byte-for-byte, so span offsets survive. Idempotent.
  std::string fragment_fixup(std::string_view rendered) const;

  // Display form -> raw surface bytes ('_' becomes the marker byte).
  std::string internalize(std::string_view display) const;
  // Raw surface bytes -> display form.
  std::string display(std::string_view raw) const;

  bool operator==(const Tokenizer& other) const;

  // Allocation-light id-only encoding for hot paths (thread-local scratch).
  void encode_ids(std::string_view text, std::vector<int>& out) const;

 private:
  std::vector<std::string> surfaces_;
  std::vector<Merge> merges_;
  std::unordered_set<int> specials_;
  uint8_t marker_ = kDefaultMarker;
  std::optional<FragmentSpec> fragments_;

  // Derived lookups.
  std::array<int, 256> base_of_byte_{};
  std::array<int, 256> lead_tails_{};  // -1 unless the byte is a lead
  std::unordered_map<uint64_t, int> merge_rank_;
  std::unordered_map<std::string, int> by_surface_;
  size_t max_surface_len_ = 1;

  static uint64_t pair_key(int l, int r) {
    return (static_cast<uint64_t>(static_cast<uint32_t>(l)) << 32) |
           static_cast<uint32_t>(r);
  }
  void merge_word(std::vector<int>& syms, size_t word_begin) const;
  void normalize(std::string_view text, std::string& out) const;
  void rebuild_index();  // validates structural invariants
};

}  // namespace stegomark
