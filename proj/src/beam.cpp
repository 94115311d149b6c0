#include "egad/beam.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <set>
#include <stdexcept>

namespace egad {

void GenerationConfig::validate() const {
    if (num_beams < 1) throw std::invalid_argument("num_beams must be >= 1");
    if (min_length < 1 || min_length > max_length) {
        throw std::invalid_argument("need 1 <= min_length <= max_length");
    }
    if (no_repeat_ngram < 0) throw std::invalid_argument("no_repeat_ngram must be >= 0");
}

double length_penalized_score(double cum_log_prob, int len, double alpha) {
    if (len < 1) throw std::invalid_argument("length must be >= 1");
    return cum_log_prob / std::pow(static_cast<double>(len), alpha);
}

namespace {

// Token ids banned by the no-repeat rule: x is banned when the n-gram formed
// by the hypothesis's last n-1 tokens plus x already occurs in the hypothesis
// (BOS included in the scan).
std::set<TokenId> banned_ngram_tokens(const std::vector<TokenId>& tokens, int ngram) {
    std::set<TokenId> banned;
    const int len = static_cast<int>(tokens.size());
    if (ngram <= 0 || len < ngram - 1 || ngram < 1) return banned;
    for (int start = 0; start + ngram <= len; ++start) {
        bool prefix_match = true;
        for (int k = 0; k < ngram - 1; ++k) {
            if (tokens[static_cast<std::size_t>(start + k)] !=
                tokens[static_cast<std::size_t>(len - (ngram - 1) + k)]) {
                prefix_match = false;
                break;
            }
        }
        if (prefix_match) banned.insert(tokens[static_cast<std::size_t>(start + ngram - 1)]);
    }
    return banned;
}

struct Candidate {
    double cum_log_prob;
    TokenId token;
    int beam_index;
};

TokenSeq strip_bos(const std::vector<TokenId>& tokens) {
    TokenSeq out;
    out.ids.assign(tokens.begin() + 1, tokens.end());
    return out;
}

bool better_final(double score, const TokenSeq& tokens, double best_score,
                  const TokenSeq& best_tokens) {
    if (score != best_score) return score > best_score;
    return tokens.ids < best_tokens.ids;  // deterministic tie-break
}

}  // namespace

GenerationResult generate(const ModelParams& params, const ModelConfig& model_cfg,
                          const TokenSeq& input, const std::vector<int>& globals,
                          const GenerationConfig& cfg) {
    cfg.validate();
    if (input.empty()) throw std::invalid_argument("generate: input must be non-empty");

    const Matrix encoder_out = encode(input, globals, params, model_cfg);
    const int vocab = model_cfg.vocab_size;

    std::vector<BeamHypothesis> live(1);
    live[0].tokens.ids.push_back(BOS);

    std::vector<BeamHypothesis> finished;
    bool forced_eos = false;

    for (int step = 0; step < cfg.max_length && !live.empty(); ++step) {
        const int emitted_len = step + 1;  // length if a token is emitted now
        std::vector<Candidate> candidates;
        for (int b = 0; b < static_cast<int>(live.size()); ++b) {
            const BeamHypothesis& beam = live[static_cast<std::size_t>(b)];
            const Matrix logits = decode(encoder_out, input, beam.tokens, params, model_cfg);
            const Vector log_probs = log_softmax(logits.row(logits.rows() - 1).transpose());

            const std::set<TokenId> banned = banned_ngram_tokens(beam.tokens.ids, cfg.no_repeat_ngram);
            bool any_allowed = false;
            for (TokenId tok = 0; tok < vocab; ++tok) {
                if (tok == EOS && emitted_len < cfg.min_length) continue;
                if (banned.count(tok)) continue;
                candidates.push_back({beam.cum_log_prob + log_probs[tok], tok, b});
                any_allowed = true;
            }
            if (!any_allowed) {
                // Dead end; finish with EOS at its true log-probability.
                std::cerr << "generate: all continuations banned, forcing EOS\n";
                forced_eos = true;
                BeamHypothesis forced = beam;
                forced.tokens.ids.push_back(EOS);
                forced.cum_log_prob += log_probs[EOS];
                forced.finished = true;
                finished.push_back(std::move(forced));
            }
        }
        if (candidates.empty()) {
            // Every live beam dead-ended and was force-finished above.
            live.clear();
            break;
        }

        std::stable_sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
            if (a.cum_log_prob != b.cum_log_prob) return a.cum_log_prob > b.cum_log_prob;
            if (a.token != b.token) return a.token < b.token;
            return a.beam_index < b.beam_index;
        });
        if (static_cast<int>(candidates.size()) > cfg.num_beams) {
            candidates.resize(static_cast<std::size_t>(cfg.num_beams));
        }

        std::vector<BeamHypothesis> next_live;
        for (const Candidate& c : candidates) {
            BeamHypothesis h = live[static_cast<std::size_t>(c.beam_index)];
            h.tokens.ids.push_back(c.token);
            h.cum_log_prob = c.cum_log_prob;
            if (c.token == EOS) {
                h.finished = true;
                finished.push_back(std::move(h));
            } else {
                next_live.push_back(std::move(h));
            }
        }
        live = std::move(next_live);

        if (cfg.early_stopping && static_cast<int>(finished.size()) >= cfg.num_beams) {
            live.clear();
        }
    }

    // Anything still live ran into max_length; it competes as-is.
    for (BeamHypothesis& h : live) {
        h.finished = true;
        finished.push_back(std::move(h));
    }
    if (finished.empty()) {
        throw std::logic_error("generate: no finished hypotheses");
    }

    GenerationResult result;
    bool have_best = false;
    for (const BeamHypothesis& h : finished) {
        const int len = static_cast<int>(h.tokens.size()) - 1;  // BOS excluded
        const TokenSeq generated = strip_bos(h.tokens.ids);
        const double score = length_penalized_score(h.cum_log_prob, std::max(len, 1),
                                                    cfg.length_penalty);
        if (!have_best || better_final(score, generated, result.score, result.tokens)) {
            result.score = score;
            result.tokens = generated;
            have_best = true;
        }
    }
    result.forced_eos = forced_eos;
    return result;
}

}  // namespace egad
