#include "egad/model.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "egad/rng.hpp"

namespace egad {

const char* to_string(DecoderOrder order) {
    return order == DecoderOrder::CrossThenSelf ? "cross_then_self" : "self_then_cross";
}

DecoderOrder decoder_order_from_string(const std::string& name) {
    if (name == "cross_then_self") return DecoderOrder::CrossThenSelf;
    if (name == "self_then_cross") return DecoderOrder::SelfThenCross;
    throw std::invalid_argument("unknown decoder order: " + name);
}

void ModelConfig::validate() const {
    // PAD, BOS, and EOS are the minimum the decoding contract relies on.
    if (vocab_size < 3) throw std::invalid_argument("vocab_size must be at least 3");
    if (d_model < 1 || n_heads < 1 || d_ff < 1) throw std::invalid_argument("bad model dimensions");
    if (d_model % n_heads != 0) throw std::invalid_argument("d_model must be divisible by n_heads");
    if (encoder_layers < 0 || decoder_layers < 0) throw std::invalid_argument("negative layer count");
    if (max_positions < 1) throw std::invalid_argument("max_positions must be >= 1");
    if (half_width < 0 || dilation < 1) throw std::invalid_argument("bad window parameters");
    if (layernorm_epsilon <= 0) throw std::invalid_argument("layernorm_epsilon must be > 0");
}

namespace {

void fill_uniform(Matrix& m, Rng& rng, double bound) {
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        m.data()[i] = (2.0 * rng.next_double() - 1.0) * bound;
    }
}

void fill_uniform(Vector& v, Rng& rng, double bound) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        v[i] = (2.0 * rng.next_double() - 1.0) * bound;
    }
}

AttentionParams make_attention(int d, Rng& rng) {
    AttentionParams p;
    for (Matrix* w : {&p.wq, &p.wk, &p.wv, &p.wo}) {
        w->resize(d, d);
        fill_uniform(*w, rng, 0.08);
    }
    return p;
}

LayerNormParams make_layernorm(int d) {
    LayerNormParams p;
    p.gain = Vector::Ones(d);
    p.bias = Vector::Zero(d);
    return p;
}

FfnParams make_ffn(int d, int d_ff, Rng& rng) {
    FfnParams p;
    p.w_in.resize(d, d_ff);
    p.b_in.resize(d_ff);
    p.w_out.resize(d_ff, d);
    p.b_out.resize(d);
    fill_uniform(p.w_in, rng, 0.08);
    fill_uniform(p.b_in, rng, 0.08);
    fill_uniform(p.w_out, rng, 0.08);
    fill_uniform(p.b_out, rng, 0.08);
    return p;
}

}  // namespace

ModelParams init_params(const ModelConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    Rng rng(seed);
    ModelParams p;
    p.token_embedding.resize(cfg.vocab_size, cfg.d_model);
    p.position_embedding.resize(cfg.max_positions, cfg.d_model);
    fill_uniform(p.token_embedding, rng, 0.08);
    fill_uniform(p.position_embedding, rng, 0.08);
    for (int i = 0; i < cfg.encoder_layers; ++i) {
        EncoderLayerParams layer;
        layer.attn = make_attention(cfg.d_model, rng);
        layer.ln_attn = make_layernorm(cfg.d_model);
        layer.ln_ffn = make_layernorm(cfg.d_model);
        layer.ffn = make_ffn(cfg.d_model, cfg.d_ff, rng);
        p.encoder.push_back(std::move(layer));
    }
    for (int i = 0; i < cfg.decoder_layers; ++i) {
        DecoderLayerParams layer;
        layer.cross = make_attention(cfg.d_model, rng);
        layer.self_attn = make_attention(cfg.d_model, rng);
        layer.ln_first = make_layernorm(cfg.d_model);
        layer.ln_second = make_layernorm(cfg.d_model);
        layer.ln_ffn = make_layernorm(cfg.d_model);
        layer.ffn = make_ffn(cfg.d_model, cfg.d_ff, rng);
        p.decoder.push_back(std::move(layer));
    }
    p.output_head.resize(cfg.d_model, cfg.vocab_size);
    fill_uniform(p.output_head, rng, 0.08);
    return p;
}

ModelParams zeros_like(const ModelParams& reference) {
    ModelParams z = reference;
    visit_params([](const std::string&, auto& arr) { arr.setZero(); }, z);
    return z;
}

std::size_t param_count(const ModelParams& params) {
    std::size_t n = 0;
    visit_params([&n](const std::string&, const auto& arr) { n += static_cast<std::size_t>(arr.size()); },
                 params);
    return n;
}

void check_finite(const ModelParams& params, const std::string& what) {
    visit_params(
        [&what](const std::string& name, const auto& arr) {
            if (!arr.allFinite()) {
                throw std::runtime_error(what + ": non-finite values in " + name);
            }
        },
        params);
}

namespace {

void append_le_doubles(std::string& out, const double* data, std::size_t count) {
    for (std::size_t i = 0; i < count; ++i) {
        auto bits = std::bit_cast<std::uint64_t>(data[i]);
        for (int b = 0; b < 8; ++b) {
            out.push_back(static_cast<char>((bits >> (8 * b)) & 0xff));
        }
    }
}

void read_le_doubles(const std::string& in, std::size_t offset, double* data, std::size_t count) {
    if (offset + count * 8 > in.size()) {
        throw std::runtime_error("checkpoint binary truncated");
    }
    for (std::size_t i = 0; i < count; ++i) {
        std::uint64_t bits = 0;
        for (int b = 0; b < 8; ++b) {
            bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[offset + i * 8 + b]))
                    << (8 * b);
        }
        data[i] = std::bit_cast<double>(bits);
    }
}

nlohmann::json config_to_json(const ModelConfig& cfg) {
    return {
        {"vocab_size", cfg.vocab_size},
        {"d_model", cfg.d_model},
        {"n_heads", cfg.n_heads},
        {"d_ff", cfg.d_ff},
        {"encoder_layers", cfg.encoder_layers},
        {"decoder_layers", cfg.decoder_layers},
        {"max_positions", cfg.max_positions},
        {"half_width", cfg.half_width},
        {"dilation", cfg.dilation},
        {"layernorm_epsilon", cfg.layernorm_epsilon},
        {"decoder_order", to_string(cfg.decoder_order)},
    };
}

ModelConfig config_from_json(const nlohmann::json& j) {
    ModelConfig cfg;
    cfg.vocab_size = j.at("vocab_size").get<int>();
    cfg.d_model = j.at("d_model").get<int>();
    cfg.n_heads = j.at("n_heads").get<int>();
    cfg.d_ff = j.at("d_ff").get<int>();
    cfg.encoder_layers = j.at("encoder_layers").get<int>();
    cfg.decoder_layers = j.at("decoder_layers").get<int>();
    cfg.max_positions = j.at("max_positions").get<int>();
    cfg.half_width = j.at("half_width").get<int>();
    cfg.dilation = j.at("dilation").get<int>();
    cfg.layernorm_epsilon = j.at("layernorm_epsilon").get<double>();
    cfg.decoder_order = decoder_order_from_string(j.at("decoder_order").get<std::string>());
    return cfg;
}

}  // namespace

void save_checkpoint(const ModelParams& params, const ModelConfig& cfg,
                     const std::string& prefix) {
    check_finite(params, "save_checkpoint");
    std::string blob;
    nlohmann::json arrays = nlohmann::json::array();
    visit_params(
        [&](const std::string& name, const auto& arr) {
            arrays.push_back({{"name", name},
                              {"rows", arr.rows()},
                              {"cols", arr.cols()},
                              {"offset", blob.size()}});
            append_le_doubles(blob, arr.data(), static_cast<std::size_t>(arr.size()));
        },
        params);

    nlohmann::json manifest = {
        {"format_version", 1},
        {"config", config_to_json(cfg)},
        {"arrays", arrays},
    };

    std::ofstream bin(prefix + ".bin", std::ios::binary);
    if (!bin) throw std::runtime_error("cannot write checkpoint: " + prefix + ".bin");
    bin.write(blob.data(), static_cast<std::streamsize>(blob.size()));
    if (!bin) throw std::runtime_error("failed writing checkpoint: " + prefix + ".bin");

    std::ofstream js(prefix + ".json", std::ios::binary);
    if (!js) throw std::runtime_error("cannot write checkpoint manifest: " + prefix + ".json");
    js << manifest.dump(2) << "\n";
}

Checkpoint load_checkpoint(const std::string& prefix) {
    std::ifstream js(prefix + ".json", std::ios::binary);
    if (!js) throw std::runtime_error("cannot open checkpoint manifest: " + prefix + ".json");
    nlohmann::json manifest;
    js >> manifest;
    if (manifest.at("format_version").get<int>() != 1) {
        throw std::runtime_error("unsupported checkpoint format version");
    }

    std::ifstream bin(prefix + ".bin", std::ios::binary);
    if (!bin) throw std::runtime_error("cannot open checkpoint: " + prefix + ".bin");
    std::string blob((std::istreambuf_iterator<char>(bin)), std::istreambuf_iterator<char>());

    Checkpoint ckpt;
    ckpt.config = config_from_json(manifest.at("config"));
    ckpt.params = init_params(ckpt.config, 0);

    const auto& arrays = manifest.at("arrays");
    std::size_t idx = 0;
    visit_params(
        [&](const std::string& name, auto& arr) {
            if (idx >= arrays.size()) throw std::runtime_error("checkpoint manifest too short");
            const auto& entry = arrays.at(idx++);
            if (entry.at("name").get<std::string>() != name ||
                entry.at("rows").get<Eigen::Index>() != arr.rows() ||
                entry.at("cols").get<Eigen::Index>() != arr.cols()) {
                throw std::runtime_error("checkpoint array mismatch at " + name);
            }
            read_le_doubles(blob, entry.at("offset").get<std::size_t>(), arr.data(),
                            static_cast<std::size_t>(arr.size()));
        },
        ckpt.params);
    if (idx != arrays.size()) throw std::runtime_error("checkpoint manifest has extra arrays");
    check_finite(ckpt.params, "load_checkpoint");
    return ckpt;
}

}  // namespace egad
