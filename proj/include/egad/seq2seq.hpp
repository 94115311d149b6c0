#pragma once

#include <functional>
#include <vector>

#include "egad/model.hpp"
#include "egad/types.hpp"

namespace egad {

// Allowed key indices per query row. Rows must be non-empty: every query
// needs at least one key or its softmax is undefined.
using RowAllowed = std::vector<std::vector<int>>;

RowAllowed rows_from_predicate(int n_queries, int n_keys,
                               const std::function<bool(int, int)>& allowed);

// Scaled dot-product attention over pre-projected Q/K/V, computed only for
// the allowed pairs; heads are column blocks, concatenated on return. The
// caller owns the surrounding input/output projections. probs_out, when
// given, receives one dense n_q x n_k probability matrix per head with exact
// zeros at disallowed pairs.
Matrix attention(const Matrix& queries, const Matrix& keys, const Matrix& values,
                 const RowAllowed& allowed, int n_heads,
                 std::vector<Matrix>* probs_out = nullptr);

// --- forward traces (everything backward needs) ---

struct AttentionTrace {
    Matrix q_in, kv_in;
    Matrix q, k, v;             // projected, full width
    std::vector<Matrix> probs;  // per head
    Matrix concat;              // before the output projection
};

struct LayerNormTrace {
    Matrix x_hat;
    Vector inv_std;
};

struct FfnTrace {
    Matrix input;
    Matrix z;  // pre-activation
    Matrix h;  // activation output
};

struct EncoderLayerTrace {
    AttentionTrace attn;
    Matrix r1;
    LayerNormTrace ln1;
    Matrix l1;
    FfnTrace ffn;
    Matrix r2;
    LayerNormTrace ln2;
    Matrix out;
};

struct EncoderTrace {
    TokenSeq ids;
    RowAllowed allowed;  // sparse pattern with PAD keys removed
    Matrix embedded;
    std::vector<EncoderLayerTrace> layers;
    Matrix out;
};

struct DecoderLayerTrace {
    AttentionTrace first, second;  // sublayer order follows the config
    Matrix r1;
    LayerNormTrace ln1;
    Matrix l1;
    Matrix r2;
    LayerNormTrace ln2;
    Matrix l2;
    FfnTrace ffn;
    Matrix r3;
    LayerNormTrace ln3;
    Matrix out;
};

struct DecoderTrace {
    TokenSeq prefix;
    RowAllowed causal;  // decoder self-attention
    RowAllowed cross;   // decoder -> encoder, PAD encoder keys removed
    Matrix embedded;
    std::vector<DecoderLayerTrace> layers;
    Matrix hidden;
    Matrix logits;
};

struct ForwardTrace {
    EncoderTrace enc;
    DecoderTrace dec;
    TokenSeq targets;
    double loss = 0.0;
};

// --- the module operations ---

// Token + position embeddings, then encoder_layers of sparse self-attention
// (window of cfg.half_width/cfg.dilation plus the given globals) with
// post-layernorm residual blocks. PAD positions are excluded as keys.
EncoderTrace encode_with_trace(const TokenSeq& input, const std::vector<int>& globals,
                               const ModelParams& params, const ModelConfig& cfg);

Matrix encode(const TokenSeq& input, const std::vector<int>& globals, const ModelParams& params,
              const ModelConfig& cfg);

// Teacher-forced parallel decode of a BOS-initiated prefix. Decoder
// self-attention is causal and dense; cross-attention sees every non-PAD
// encoder position. Returns logits for every prefix position.
DecoderTrace decode_with_trace(const Matrix& encoder_out, const TokenSeq& encoder_ids,
                               const TokenSeq& target_prefix, const ModelParams& params,
                               const ModelConfig& cfg);

Matrix decode(const Matrix& encoder_out, const TokenSeq& encoder_ids,
              const TokenSeq& target_prefix, const ModelParams& params, const ModelConfig& cfg);

// Mean token-level cross-entropy over non-PAD targets, log-sum-exp
// stabilized. Throws if every target is PAD.
double cross_entropy_loss(const Matrix& logits, const TokenSeq& targets);

// d loss / d logits, scaled. Zero rows at PAD targets.
Matrix cross_entropy_backward(const Matrix& logits, const TokenSeq& targets, double scale = 1.0);

// Full teacher-forced pass: encode, decode, loss.
ForwardTrace forward(const TokenSeq& input, const std::vector<int>& globals,
                     const TokenSeq& target_prefix, const TokenSeq& targets,
                     const ModelParams& params, const ModelConfig& cfg);

// Exact analytic gradient of scale * loss for every parameter array.
ModelGrads backward(const ForwardTrace& trace, const ModelParams& params, const ModelConfig& cfg,
                    double scale = 1.0);

// Log-softmax of one logit row; used by decoding and tests.
Vector log_softmax(const Vector& logits);

}  // namespace egad
