#pragma once

#include <string>
#include <vector>

#include "egad/model.hpp"
#include "egad/seq2seq.hpp"
#include "egad/types.hpp"

namespace egad {

struct GenerationConfig {
    int num_beams = 4;
    int max_length = 512;  // generated tokens, EOS included, BOS excluded
    int min_length = 100;
    double length_penalty = 1.6;
    bool early_stopping = true;
    int no_repeat_ngram = 3;  // 0 disables the constraint

    void validate() const;

    // Per-dataset generation presets.
    static GenerationConfig arxiv() { return {4, 512, 100, 1.6, true, 3}; }
    static GenerationConfig ami() { return {3, 768, 100, 1.3, true, 3}; }
    static GenerationConfig icsi() { return {4, 1024, 512, 1.6, true, 3}; }
};

// One beam: BOS-initiated tokens and the running sum of token log-probs.
struct BeamHypothesis {
    TokenSeq tokens;
    double cum_log_prob = 0.0;
    bool finished = false;
};

// cum_log_prob / len^alpha, the ranking score for finished hypotheses.
// len counts generated tokens (BOS excluded, EOS included when emitted).
double length_penalized_score(double cum_log_prob, int len, double alpha);

struct GenerationResult {
    TokenSeq tokens;  // generated ids, BOS stripped, terminal EOS kept
    double score = 0.0;
    bool forced_eos = false;  // a step had every continuation banned
};

// Beam search over the decoder. Each step expands every live beam over the
// vocabulary and keeps the top num_beams continuations by cumulative
// log-probability (ties: lower token id, then lower beam index). EOS is
// banned while the emitted length would stay below min_length; tokens that
// would repeat an n-gram of the hypothesis are banned. Beams emitting EOS
// retire to the finished pool; with early_stopping the search stops once the
// pool holds num_beams hypotheses. Live beams are force-finished at
// max_length. The answer maximizes length_penalized_score (ties:
// lexicographically smaller token sequence).
GenerationResult generate(const ModelParams& params, const ModelConfig& model_cfg,
                          const TokenSeq& input, const std::vector<int>& globals,
                          const GenerationConfig& cfg);

}  // namespace egad
