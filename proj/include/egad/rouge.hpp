#pragma once

#include <string>
#include <vector>

#include "egad/types.hpp"

namespace egad {

struct RougeEntry {
    double precision = 0.0;
    double recall = 0.0;
    double f_measure = 0.0;
};

struct RougeScore {
    RougeEntry rouge1, rouge2, rougeL;
};

// Scoring tokenization: lowercase, keep maximal [a-z0-9] runs, drop
// everything else. Mirrors the reference scoring package, and is deliberately
// separate from the corpus tokenizer.
std::vector<std::string> rouge_tokenize(const std::string& text);

// ROUGE-N (n in {1,2}): clipped n-gram overlap. Empty n-gram sets on either
// side score 0/0/0.
RougeEntry rouge_n(const std::vector<std::string>& candidate,
                   const std::vector<std::string>& reference, int n);

// ROUGE-L over the whole token sequences (no sentence segmentation),
// beta = 1 F-measure.
RougeEntry rouge_l(const std::vector<std::string>& candidate,
                   const std::vector<std::string>& reference);

RougeScore rouge_all(const std::vector<std::string>& candidate,
                     const std::vector<std::string>& reference);

// Arithmetic mean of per-pair scores, in pair order. Requires >= 1 pair.
RougeScore corpus_rouge(
    const std::vector<std::pair<std::vector<std::string>, std::vector<std::string>>>& pairs);

}  // namespace egad
