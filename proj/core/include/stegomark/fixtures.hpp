#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stegomark/lm.hpp"
#include "stegomark/tokenizer.hpp"

namespace stegomark::fixtures {

// Hand-assembled tokenizer with several word families where a whole-word
// token coexists with its parts (e.g. "_no" + "body" and "_nobody"), two
// special tokens, and fragment bytes. Emitting a part where the whole word
// re-merges yields a lasting round-trip mismatch; emitting a fragment lead
// yields one that clears once its tail bytes arrive.
Tokenizer ambiguous_tokenizer();

// Fragment-bearing variant without specials or whole-word ambiguity merges:
// nearly every mismatch is transient.
Tokenizer transient_tokenizer();

// No fragments, no specials: j/x/v/q are ordinary bytes here. Used for
// timing baselines over consistent runs.
Tokenizer plain_tokenizer();

// Two-letter alphabet where every pair has a merge: after history ["a"]
// every candidate breaks the round trip.
Tokenizer dead_end_tokenizer();

// Deterministic word-soup corpus over the fixture families.
std::string fixture_corpus(size_t lines = 300, uint64_t seed = 7);

// Larger generated corpus of pseudo-words for training the calibration
// tokenizer.
std::string synthetic_corpus(size_t lines = 1500, uint64_t seed = 11);

// BPE-trained tokenizer (target vocabulary ~2048) used for watermark
// calibration and benchmarks.
Tokenizer calibration_tokenizer(int vocab_size = 2048);

NGramLm fixture_ngram(const Tokenizer& tk, int n = 3, double alpha = 0.01);
HashLm fixture_hash(const Tokenizer& tk, double concentration = 1.0,
                    int context = 3, std::string key = "fixture-key");

// First `count` prompts: the leading words (or characters) of corpus lines
// chosen by a seeded shuffle.
std::vector<std::string> prompts_from_corpus(const std::string& corpus,
                                             size_t count, bool by_words,
                                             int unit_count, uint64_t seed);

}  // namespace stegomark::fixtures
