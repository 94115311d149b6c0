#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "egad/types.hpp"

namespace egad {

// Decoder sublayer order. The default runs cross-attention before
// self-attention; the conventional transformer order is also available.
enum class DecoderOrder { CrossThenSelf, SelfThenCross };

const char* to_string(DecoderOrder order);
DecoderOrder decoder_order_from_string(const std::string& name);

struct ModelConfig {
    int vocab_size = 0;
    int d_model = 64;
    int n_heads = 2;
    int d_ff = 256;  // convention: 4 * d_model
    int encoder_layers = 2;
    int decoder_layers = 2;
    int max_positions = 512;
    int half_width = 16;  // encoder window half-width
    int dilation = 1;
    double layernorm_epsilon = 1e-5;
    DecoderOrder decoder_order = DecoderOrder::CrossThenSelf;

    int head_dim() const { return d_model / n_heads; }
    void validate() const;
};

struct AttentionParams {
    Matrix wq, wk, wv, wo;  // each d_model x d_model
};

struct LayerNormParams {
    Vector gain, bias;
};

struct FfnParams {
    Matrix w_in;   // d_model x d_ff
    Vector b_in;   // d_ff
    Matrix w_out;  // d_ff x d_model
    Vector b_out;  // d_model
};

struct EncoderLayerParams {
    AttentionParams attn;
    LayerNormParams ln_attn, ln_ffn;
    FfnParams ffn;
};

struct DecoderLayerParams {
    AttentionParams cross, self_attn;
    LayerNormParams ln_first, ln_second, ln_ffn;
    FfnParams ffn;
};

// Every learnable array. Gradients reuse this struct with identical shapes.
struct ModelParams {
    Matrix token_embedding;     // vocab_size x d_model
    Matrix position_embedding;  // max_positions x d_model
    std::vector<EncoderLayerParams> encoder;
    std::vector<DecoderLayerParams> decoder;
    Matrix output_head;  // d_model x vocab_size
};

using ModelGrads = ModelParams;

// Visits every parameter array of each passed ModelParams in one fixed
// order, calling f(name, array&...). All structs must share layer counts.
template <class F, class... P>
void visit_params(F&& f, P&... params) {
    auto layer_count = [](const auto& first, const auto&...) { return first; };
    f("token_embedding", params.token_embedding...);
    f("position_embedding", params.position_embedding...);
    const std::size_t n_enc = layer_count(params.encoder.size()...);
    for (std::size_t i = 0; i < n_enc; ++i) {
        const std::string base = "encoder." + std::to_string(i) + ".";
        f(base + "attn.wq", params.encoder[i].attn.wq...);
        f(base + "attn.wk", params.encoder[i].attn.wk...);
        f(base + "attn.wv", params.encoder[i].attn.wv...);
        f(base + "attn.wo", params.encoder[i].attn.wo...);
        f(base + "ln_attn.gain", params.encoder[i].ln_attn.gain...);
        f(base + "ln_attn.bias", params.encoder[i].ln_attn.bias...);
        f(base + "ffn.w_in", params.encoder[i].ffn.w_in...);
        f(base + "ffn.b_in", params.encoder[i].ffn.b_in...);
        f(base + "ffn.w_out", params.encoder[i].ffn.w_out...);
        f(base + "ffn.b_out", params.encoder[i].ffn.b_out...);
        f(base + "ln_ffn.gain", params.encoder[i].ln_ffn.gain...);
        f(base + "ln_ffn.bias", params.encoder[i].ln_ffn.bias...);
    }
    const std::size_t n_dec = layer_count(params.decoder.size()...);
    for (std::size_t i = 0; i < n_dec; ++i) {
        const std::string base = "decoder." + std::to_string(i) + ".";
        f(base + "cross.wq", params.decoder[i].cross.wq...);
        f(base + "cross.wk", params.decoder[i].cross.wk...);
        f(base + "cross.wv", params.decoder[i].cross.wv...);
        f(base + "cross.wo", params.decoder[i].cross.wo...);
        f(base + "self.wq", params.decoder[i].self_attn.wq...);
        f(base + "self.wk", params.decoder[i].self_attn.wk...);
        f(base + "self.wv", params.decoder[i].self_attn.wv...);
        f(base + "self.wo", params.decoder[i].self_attn.wo...);
        f(base + "ln_first.gain", params.decoder[i].ln_first.gain...);
        f(base + "ln_first.bias", params.decoder[i].ln_first.bias...);
        f(base + "ln_second.gain", params.decoder[i].ln_second.gain...);
        f(base + "ln_second.bias", params.decoder[i].ln_second.bias...);
        f(base + "ffn.w_in", params.decoder[i].ffn.w_in...);
        f(base + "ffn.b_in", params.decoder[i].ffn.b_in...);
        f(base + "ffn.w_out", params.decoder[i].ffn.w_out...);
        f(base + "ffn.b_out", params.decoder[i].ffn.b_out...);
        f(base + "ln_ffn.gain", params.decoder[i].ln_ffn.gain...);
        f(base + "ln_ffn.bias", params.decoder[i].ln_ffn.bias...);
    }
    f("output_head", params.output_head...);
}

// Seeded uniform init in [-0.08, 0.08] for weights, embeddings, and biases;
// layernorm affine starts at the identity (gain 1, bias 0).
ModelParams init_params(const ModelConfig& cfg, std::uint64_t seed);

ModelParams zeros_like(const ModelParams& reference);

std::size_t param_count(const ModelParams& params);

// Rejects NaN/Inf anywhere; used on load and before optimizer steps.
void check_finite(const ModelParams& params, const std::string& what);

// Checkpoint: <prefix>.bin holds all arrays as little-endian IEEE-754 doubles
// back to back; <prefix>.json lists name/shape/offset per array plus the
// ModelConfig and a format version. Round-trips are bit-exact.
void save_checkpoint(const ModelParams& params, const ModelConfig& cfg,
                     const std::string& prefix);

struct Checkpoint {
    ModelConfig config;
    ModelParams params;
};

Checkpoint load_checkpoint(const std::string& prefix);

}  // namespace egad
