#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "egad/corpus.hpp"
#include "egad/rng.hpp"
#include "egad/types.hpp"

namespace egad {

// Fixed common-usage word counts standing in for corpus document frequencies.
struct BackgroundDictionary {
    std::map<std::string, long long> counts;
    long long total = 0;

    std::size_t vocab_size() const { return counts.size(); }
};

// UTF-8 text file, one "word<TAB>count" per line. Duplicate words and
// non-positive counts are load errors.
BackgroundDictionary load_background_dictionary(const std::string& path);

enum class KeywordSource { Tfidf, Random, Gibberish, Oracle };

const char* to_string(KeywordSource source);
KeywordSource keyword_source_from_string(const std::string& name);

struct KeywordConfig {
    int k = 0;
    KeywordSource source = KeywordSource::Tfidf;
    std::uint64_t seed = 0;
};

// Ordered selection; scores are populated for the tf-idf based sources and
// are non-increasing in word order.
struct KeywordSet {
    std::vector<std::string> words;
    KeywordSource source = KeywordSource::Tfidf;
    std::vector<double> scores;
};

// Top-k words of doc by tf(w) * ln(total / background_count(w)). Words absent
// from the dictionary are dropped; score ties break lexicographically
// ascending; the result is ordered by descending score.
KeywordSet tfidf_select(const std::vector<std::string>& doc, const BackgroundDictionary& bg,
                        int k);

// k words sampled uniformly without replacement from the distinct words of
// doc (all of them when fewer than k exist). Deterministic given seed.
KeywordSet random_select(const std::vector<std::string>& doc, int k, std::uint64_t seed);

// k nonsense words: length drawn from Binomial(10, 0.5) resampled until >= 1,
// characters uniform over a-z. Duplicate words are redrawn so the set stays
// duplicate-free. Deterministic given seed.
KeywordSet gibberish_generate(int k, std::uint64_t seed);

// Single gibberish word (no distinctness constraint); the generator behind
// gibberish_generate, exposed for distribution checks.
std::string gibberish_word(Rng& rng);

// tfidf_select applied to the reference summary instead of the document.
KeywordSet oracle_select(const std::vector<std::string>& summary, const BackgroundDictionary& bg,
                         int k);

// Dispatch on config.source; summary is only consulted for Oracle.
KeywordSet select_keywords(const std::vector<std::string>& doc,
                           const std::vector<std::string>& summary,
                           const BackgroundDictionary& bg, const KeywordConfig& config);

struct PrefixedInput {
    TokenSeq tokens;
    std::vector<int> global_indices;  // sorted ascending
};

// [TASK] + keyword tokens + [SEP] + doc, with TASK and every keyword global.
// With no keywords the SEP is omitted: [TASK] + doc, globals {0}.
PrefixedInput prefix_and_mark(const TokenSeq& doc_tokens, const KeywordSet& keywords,
                              const Vocabulary& vocab);

}  // namespace egad
