#include "egad/rouge.hpp"

#include <cctype>
#include <map>
#include <stdexcept>

namespace egad {

std::vector<std::string> rouge_tokenize(const std::string& text) {
    std::vector<std::string> tokens;
    std::string current;
    for (unsigned char c : text) {
        if (std::isalnum(c)) {
            current.push_back(static_cast<char>(std::tolower(c)));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

namespace {

RougeEntry from_counts(double overlap, double cand_total, double ref_total) {
    RougeEntry e;
    if (cand_total > 0) e.precision = overlap / cand_total;
    if (ref_total > 0) e.recall = overlap / ref_total;
    if (e.precision + e.recall > 0) {
        e.f_measure = 2.0 * e.precision * e.recall / (e.precision + e.recall);
    }
    return e;
}

std::map<std::vector<std::string>, long long> ngram_counts(const std::vector<std::string>& words,
                                                           int n) {
    std::map<std::vector<std::string>, long long> counts;
    if (static_cast<int>(words.size()) < n) return counts;
    for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= words.size(); ++i) {
        ++counts[std::vector<std::string>(words.begin() + static_cast<std::ptrdiff_t>(i),
                                          words.begin() + static_cast<std::ptrdiff_t>(i) + n)];
    }
    return counts;
}

}  // namespace

RougeEntry rouge_n(const std::vector<std::string>& candidate,
                   const std::vector<std::string>& reference, int n) {
    if (n != 1 && n != 2) throw std::invalid_argument("rouge_n supports n in {1, 2}");
    const auto cand = ngram_counts(candidate, n);
    const auto ref = ngram_counts(reference, n);
    long long overlap = 0;
    long long cand_total = 0;
    long long ref_total = 0;
    for (const auto& [gram, count] : cand) {
        cand_total += count;
        auto it = ref.find(gram);
        if (it != ref.end()) overlap += std::min(count, it->second);
    }
    for (const auto& [gram, count] : ref) ref_total += count;
    return from_counts(static_cast<double>(overlap), static_cast<double>(cand_total),
                       static_cast<double>(ref_total));
}

RougeEntry rouge_l(const std::vector<std::string>& candidate,
                   const std::vector<std::string>& reference) {
    const std::size_t m = candidate.size();
    const std::size_t n = reference.size();
    if (m == 0 || n == 0) return {};
    // Standard LCS table, rolling rows.
    std::vector<long long> prev(n + 1, 0), cur(n + 1, 0);
    for (std::size_t i = 1; i <= m; ++i) {
        for (std::size_t j = 1; j <= n; ++j) {
            if (candidate[i - 1] == reference[j - 1]) {
                cur[j] = prev[j - 1] + 1;
            } else {
                cur[j] = std::max(prev[j], cur[j - 1]);
            }
        }
        std::swap(prev, cur);
    }
    const double lcs = static_cast<double>(prev[n]);
    return from_counts(lcs, static_cast<double>(m), static_cast<double>(n));
}

RougeScore rouge_all(const std::vector<std::string>& candidate,
                     const std::vector<std::string>& reference) {
    RougeScore s;
    s.rouge1 = rouge_n(candidate, reference, 1);
    s.rouge2 = rouge_n(candidate, reference, 2);
    s.rougeL = rouge_l(candidate, reference);
    return s;
}

RougeScore corpus_rouge(
    const std::vector<std::pair<std::vector<std::string>, std::vector<std::string>>>& pairs) {
    if (pairs.empty()) throw std::invalid_argument("corpus_rouge requires at least one pair");
    RougeScore mean;
    auto add = [](RougeEntry& acc, const RougeEntry& e) {
        acc.precision += e.precision;
        acc.recall += e.recall;
        acc.f_measure += e.f_measure;
    };
    for (const auto& [cand, ref] : pairs) {
        const RougeScore s = rouge_all(cand, ref);
        add(mean.rouge1, s.rouge1);
        add(mean.rouge2, s.rouge2);
        add(mean.rougeL, s.rougeL);
    }
    const double inv = 1.0 / static_cast<double>(pairs.size());
    for (RougeEntry* e : {&mean.rouge1, &mean.rouge2, &mean.rougeL}) {
        e->precision *= inv;
        e->recall *= inv;
        e->f_measure *= inv;
    }
    return mean;
}

}  // namespace egad
