#include "egad/keywords.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>

namespace egad {

BackgroundDictionary load_background_dictionary(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open background dictionary: " + path);
    }
    BackgroundDictionary bg;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::size_t tab = line.find('\t');
        if (tab == std::string::npos) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": expected word<TAB>count");
        }
        const std::string word = line.substr(0, tab);
        long long count = 0;
        try {
            count = std::stoll(line.substr(tab + 1));
        } catch (const std::exception&) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": bad count");
        }
        if (word.empty() || count < 1) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": counts must be >= 1 and words non-empty");
        }
        if (!bg.counts.emplace(word, count).second) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": duplicate word \"" +
                                     word + "\"");
        }
        bg.total += count;
    }
    return bg;
}

const char* to_string(KeywordSource source) {
    switch (source) {
        case KeywordSource::Tfidf: return "tfidf";
        case KeywordSource::Random: return "random";
        case KeywordSource::Gibberish: return "gibberish";
        case KeywordSource::Oracle: return "oracle";
    }
    return "?";
}

KeywordSource keyword_source_from_string(const std::string& name) {
    if (name == "tfidf") return KeywordSource::Tfidf;
    if (name == "random") return KeywordSource::Random;
    if (name == "gibberish") return KeywordSource::Gibberish;
    if (name == "oracle") return KeywordSource::Oracle;
    throw std::invalid_argument("unknown keyword source: " + name);
}

namespace {

KeywordSet tfidf_over(const std::vector<std::string>& words, const BackgroundDictionary& bg,
                      int k, KeywordSource source) {
    if (k < 0) throw std::invalid_argument("keyword count must be >= 0");
    KeywordSet out;
    out.source = source;
    if (k == 0 || words.empty()) return out;

    std::map<std::string, long long> tf;
    for (const std::string& w : words) ++tf[w];

    // Candidates are the distinct in-dictionary words; map order makes the
    // lexicographic tie-break fall out of stable_sort.
    std::vector<std::pair<std::string, double>> scored;
    for (const auto& [word, count] : tf) {
        auto it = bg.counts.find(word);
        if (it == bg.counts.end()) continue;
        const double idf = std::log(static_cast<double>(bg.total) / static_cast<double>(it->second));
        scored.emplace_back(word, static_cast<double>(count) * idf);
    }
    std::stable_sort(scored.begin(), scored.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    const std::size_t take = std::min<std::size_t>(scored.size(), static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < take; ++i) {
        out.words.push_back(scored[i].first);
        out.scores.push_back(scored[i].second);
    }
    return out;
}

}  // namespace

KeywordSet tfidf_select(const std::vector<std::string>& doc, const BackgroundDictionary& bg,
                        int k) {
    return tfidf_over(doc, bg, k, KeywordSource::Tfidf);
}

KeywordSet oracle_select(const std::vector<std::string>& summary, const BackgroundDictionary& bg,
                         int k) {
    return tfidf_over(summary, bg, k, KeywordSource::Oracle);
}

KeywordSet random_select(const std::vector<std::string>& doc, int k, std::uint64_t seed) {
    if (k < 0) throw std::invalid_argument("keyword count must be >= 0");
    KeywordSet out;
    out.source = KeywordSource::Random;
    if (k == 0 || doc.empty()) return out;

    std::set<std::string> distinct(doc.begin(), doc.end());
    std::vector<std::string> candidates(distinct.begin(), distinct.end());
    Rng rng(seed);
    for (std::size_t idx :
         sample_without_replacement(candidates.size(), static_cast<std::size_t>(k), rng)) {
        out.words.push_back(candidates[idx]);
    }
    return out;
}

std::string gibberish_word(Rng& rng) {
    int length = 0;
    do {
        length = 0;
        for (int i = 0; i < 10; ++i) length += rng.next_bit() ? 1 : 0;
    } while (length == 0);
    std::string word(static_cast<std::size_t>(length), 'a');
    for (char& c : word) {
        c = static_cast<char>('a' + rng.next_below(26));
    }
    return word;
}

KeywordSet gibberish_generate(int k, std::uint64_t seed) {
    if (k < 0) throw std::invalid_argument("keyword count must be >= 0");
    KeywordSet out;
    out.source = KeywordSource::Gibberish;
    Rng rng(seed);
    std::set<std::string> seen;
    while (static_cast<int>(out.words.size()) < k) {
        std::string w = gibberish_word(rng);
        if (seen.insert(w).second) {
            out.words.push_back(std::move(w));
        }
    }
    return out;
}

KeywordSet select_keywords(const std::vector<std::string>& doc,
                           const std::vector<std::string>& summary,
                           const BackgroundDictionary& bg, const KeywordConfig& config) {
    switch (config.source) {
        case KeywordSource::Tfidf: return tfidf_select(doc, bg, config.k);
        case KeywordSource::Random: return random_select(doc, config.k, config.seed);
        case KeywordSource::Gibberish: return gibberish_generate(config.k, config.seed);
        case KeywordSource::Oracle: return oracle_select(summary, bg, config.k);
    }
    throw std::logic_error("unreachable keyword source");
}

PrefixedInput prefix_and_mark(const TokenSeq& doc_tokens, const KeywordSet& keywords,
                              const Vocabulary& vocab) {
    PrefixedInput out;
    out.tokens.ids.push_back(TASK);
    out.global_indices.push_back(0);
    for (std::size_t i = 0; i < keywords.words.size(); ++i) {
        out.tokens.ids.push_back(vocab.id_of(keywords.words[i]));
        out.global_indices.push_back(static_cast<int>(i) + 1);
    }
    if (!keywords.words.empty()) {
        out.tokens.ids.push_back(SEP);
    }
    out.tokens.ids.insert(out.tokens.ids.end(), doc_tokens.ids.begin(), doc_tokens.ids.end());
    return out;
}

}  // namespace egad
