#include "egad/seq2seq.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

#include "egad/attention_pattern.hpp"

namespace egad {

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014327;

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * M_SQRT1_2)); }

double gelu_prime(double x) {
    return 0.5 * (1.0 + std::erf(x * M_SQRT1_2)) + x * kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

void check_token_ids(const TokenSeq& seq, int vocab_size, const char* what) {
    for (TokenId id : seq.ids) {
        if (id < 0 || id >= vocab_size) {
            throw std::invalid_argument(std::string(what) + ": token id " + std::to_string(id) +
                                        " outside vocabulary of size " + std::to_string(vocab_size));
        }
    }
}

Matrix embed(const TokenSeq& ids, const ModelParams& params, const ModelConfig& cfg,
             const char* what) {
    const int n = static_cast<int>(ids.size());
    if (n > cfg.max_positions) {
        throw std::invalid_argument(std::string(what) + ": sequence length " + std::to_string(n) +
                                    " exceeds max_positions " + std::to_string(cfg.max_positions));
    }
    check_token_ids(ids, cfg.vocab_size, what);
    Matrix x(n, cfg.d_model);
    for (int i = 0; i < n; ++i) {
        x.row(i) = params.token_embedding.row(ids[static_cast<std::size_t>(i)]) +
                   params.position_embedding.row(i);
    }
    return x;
}

Matrix layernorm_forward(const Matrix& x, const LayerNormParams& p, double eps,
                         LayerNormTrace& t) {
    const Eigen::Index d = x.cols();
    t.x_hat.resize(x.rows(), d);
    t.inv_std.resize(x.rows());
    Matrix y(x.rows(), d);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const double mu = x.row(i).mean();
        const auto centered = (x.row(i).array() - mu).eval();
        const double var = centered.square().sum() / static_cast<double>(d);
        const double inv_std = 1.0 / std::sqrt(var + eps);
        t.inv_std[i] = inv_std;
        t.x_hat.row(i) = (centered * inv_std).matrix();
        y.row(i) = t.x_hat.row(i).cwiseProduct(p.gain.transpose()) + p.bias.transpose();
    }
    return y;
}

// Returns d loss / d x; accumulates gain/bias gradients.
Matrix layernorm_backward(const Matrix& d_y, const LayerNormTrace& t, const LayerNormParams& p,
                          LayerNormParams& grads) {
    const Eigen::Index d = d_y.cols();
    Matrix d_x(d_y.rows(), d);
    for (Eigen::Index i = 0; i < d_y.rows(); ++i) {
        grads.gain += d_y.row(i).cwiseProduct(t.x_hat.row(i)).transpose();
        grads.bias += d_y.row(i).transpose();
        const auto d_xhat = d_y.row(i).cwiseProduct(p.gain.transpose()).eval();
        const double mean_dxhat = d_xhat.mean();
        const double mean_dxhat_xhat = d_xhat.cwiseProduct(t.x_hat.row(i)).mean();
        d_x.row(i) = (t.inv_std[i] *
                      (d_xhat.array() - mean_dxhat - t.x_hat.row(i).array() * mean_dxhat_xhat))
                         .matrix();
    }
    return d_x;
}

Matrix ffn_forward(const Matrix& x, const FfnParams& p, FfnTrace& t) {
    t.input = x;
    t.z = (x * p.w_in).rowwise() + p.b_in.transpose();
    t.h = t.z.unaryExpr([](double v) { return gelu(v); });
    return (t.h * p.w_out).rowwise() + p.b_out.transpose();
}

Matrix ffn_backward(const Matrix& d_out, const FfnTrace& t, const FfnParams& p, FfnParams& grads) {
    grads.b_out += d_out.colwise().sum().transpose();
    grads.w_out += t.h.transpose() * d_out;
    Matrix d_h = d_out * p.w_out.transpose();
    Matrix d_z = d_h.cwiseProduct(t.z.unaryExpr([](double v) { return gelu_prime(v); }));
    grads.b_in += d_z.colwise().sum().transpose();
    grads.w_in += t.input.transpose() * d_z;
    return d_z * p.w_in.transpose();
}

Matrix attention_layer_forward(const Matrix& q_in, const Matrix& kv_in, const AttentionParams& p,
                               int n_heads, const RowAllowed& allowed, AttentionTrace& t) {
    t.q_in = q_in;
    t.kv_in = kv_in;
    t.q = q_in * p.wq;
    t.k = kv_in * p.wk;
    t.v = kv_in * p.wv;
    t.concat = attention(t.q, t.k, t.v, allowed, n_heads, &t.probs);
    return t.concat * p.wo;
}

// d_q_in / d_kv_in are written, not accumulated; the caller combines them
// when the attention is self-attention.
void attention_layer_backward(const Matrix& d_out, const AttentionTrace& t,
                              const AttentionParams& p, int n_heads, AttentionParams& grads,
                              Matrix& d_q_in, Matrix& d_kv_in) {
    const Eigen::Index d = t.q.cols();
    const Eigen::Index head_dim = d / n_heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));

    grads.wo += t.concat.transpose() * d_out;
    Matrix d_concat = d_out * p.wo.transpose();

    Matrix d_q = Matrix::Zero(t.q.rows(), d);
    Matrix d_k = Matrix::Zero(t.k.rows(), d);
    Matrix d_v = Matrix::Zero(t.v.rows(), d);
    for (int h = 0; h < n_heads; ++h) {
        const auto cols = Eigen::seqN(h * head_dim, head_dim);
        const Matrix& probs = t.probs[static_cast<std::size_t>(h)];
        const Matrix d_head_out = d_concat(Eigen::all, cols);
        const Matrix v_h = t.v(Eigen::all, cols);
        const Matrix d_probs = d_head_out * v_h.transpose();
        d_v(Eigen::all, cols) = probs.transpose() * d_head_out;
        // Softmax backward; disallowed entries stay zero because probs is
        // exactly zero there.
        const Vector row_dot = (d_probs.array() * probs.array()).rowwise().sum().matrix();
        const Matrix d_scores =
            (probs.array() * (d_probs.array().colwise() - row_dot.array())).matrix();
        d_q(Eigen::all, cols) = scale * d_scores * t.k(Eigen::all, cols);
        d_k(Eigen::all, cols) = scale * d_scores.transpose() * t.q(Eigen::all, cols);
    }
    grads.wq += t.q_in.transpose() * d_q;
    grads.wk += t.kv_in.transpose() * d_k;
    grads.wv += t.kv_in.transpose() * d_v;
    d_q_in = d_q * p.wq.transpose();
    d_kv_in = d_k * p.wk.transpose() + d_v * p.wv.transpose();
}

RowAllowed encoder_allowed(const TokenSeq& ids, const std::vector<int>& globals,
                           const ModelConfig& cfg) {
    const int n = static_cast<int>(ids.size());
    const AttentionPattern pattern =
        build_pattern(PatternKind::Egad, n, cfg.half_width, cfg.dilation,
                      std::set<int>(globals.begin(), globals.end()));
    RowAllowed allowed = pattern.row_allowed();
    for (int i = 0; i < n; ++i) {
        auto& row = allowed[static_cast<std::size_t>(i)];
        std::erase_if(row, [&](int j) {
            return ids[static_cast<std::size_t>(j)] == PAD && j != i;
        });
    }
    return allowed;
}

RowAllowed causal_allowed(const TokenSeq& prefix) {
    const int t = static_cast<int>(prefix.size());
    RowAllowed allowed(static_cast<std::size_t>(t));
    for (int i = 0; i < t; ++i) {
        for (int j = 0; j <= i; ++j) {
            if (prefix[static_cast<std::size_t>(j)] != PAD || j == i) {
                allowed[static_cast<std::size_t>(i)].push_back(j);
            }
        }
    }
    return allowed;
}

RowAllowed cross_allowed(int n_queries, const TokenSeq& encoder_ids) {
    std::vector<int> keys;
    for (int j = 0; j < static_cast<int>(encoder_ids.size()); ++j) {
        if (encoder_ids[static_cast<std::size_t>(j)] != PAD) keys.push_back(j);
    }
    if (keys.empty()) {
        throw std::invalid_argument("cross-attention has no non-PAD encoder keys");
    }
    return RowAllowed(static_cast<std::size_t>(n_queries), keys);
}

}  // namespace

RowAllowed rows_from_predicate(int n_queries, int n_keys,
                               const std::function<bool(int, int)>& allowed) {
    RowAllowed rows(static_cast<std::size_t>(n_queries));
    for (int i = 0; i < n_queries; ++i) {
        for (int j = 0; j < n_keys; ++j) {
            if (allowed(i, j)) rows[static_cast<std::size_t>(i)].push_back(j);
        }
    }
    return rows;
}

Matrix attention(const Matrix& queries, const Matrix& keys, const Matrix& values,
                 const RowAllowed& allowed, int n_heads, std::vector<Matrix>* probs_out) {
    const Eigen::Index m = queries.rows();
    const Eigen::Index n = keys.rows();
    const Eigen::Index d = queries.cols();
    if (keys.cols() != d || values.rows() != n) {
        throw std::invalid_argument("attention shape mismatch");
    }
    if (n_heads < 1 || d % n_heads != 0 || values.cols() % n_heads != 0) {
        throw std::invalid_argument("attention width not divisible into heads");
    }
    if (static_cast<Eigen::Index>(allowed.size()) != m) {
        throw std::invalid_argument("allowed-row count does not match query count");
    }
    const Eigen::Index head_dim = d / n_heads;
    const Eigen::Index value_dim = values.cols() / n_heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));

    if (probs_out) probs_out->assign(static_cast<std::size_t>(n_heads), Matrix());
    Matrix out(m, values.cols());
    std::vector<double> scores;
    for (int h = 0; h < n_heads; ++h) {
        const auto q_cols = Eigen::seqN(h * head_dim, head_dim);
        const auto v_cols = Eigen::seqN(h * value_dim, value_dim);
        Matrix probs = Matrix::Zero(m, n);
        for (Eigen::Index i = 0; i < m; ++i) {
            const auto& row_keys = allowed[static_cast<std::size_t>(i)];
            if (row_keys.empty()) {
                throw std::invalid_argument("attention query row " + std::to_string(i) +
                                            " has no allowed keys");
            }
            scores.clear();
            double max_score = -std::numeric_limits<double>::infinity();
            for (int j : row_keys) {
                const double s = scale * queries.row(i)(q_cols).dot(keys.row(j)(q_cols));
                scores.push_back(s);
                max_score = std::max(max_score, s);
            }
            double denom = 0.0;
            for (double& s : scores) {
                s = std::exp(s - max_score);
                denom += s;
            }
            for (std::size_t k = 0; k < row_keys.size(); ++k) {
                probs(i, row_keys[k]) = scores[k] / denom;
            }
        }
        out(Eigen::all, v_cols) = probs * values(Eigen::all, v_cols);
        if (probs_out) (*probs_out)[static_cast<std::size_t>(h)] = std::move(probs);
    }
    return out;
}

EncoderTrace encode_with_trace(const TokenSeq& input, const std::vector<int>& globals,
                               const ModelParams& params, const ModelConfig& cfg) {
    cfg.validate();
    EncoderTrace trace;
    trace.ids = input;
    trace.embedded = embed(input, params, cfg, "encode");
    trace.allowed = encoder_allowed(input, globals, cfg);

    Matrix x = trace.embedded;
    trace.layers.resize(static_cast<std::size_t>(cfg.encoder_layers));
    for (int l = 0; l < cfg.encoder_layers; ++l) {
        const EncoderLayerParams& p = params.encoder[static_cast<std::size_t>(l)];
        EncoderLayerTrace& t = trace.layers[static_cast<std::size_t>(l)];
        const Matrix attn_out =
            attention_layer_forward(x, x, p.attn, cfg.n_heads, trace.allowed, t.attn);
        t.r1 = x + attn_out;
        t.l1 = layernorm_forward(t.r1, p.ln_attn, cfg.layernorm_epsilon, t.ln1);
        const Matrix ffn_out = ffn_forward(t.l1, p.ffn, t.ffn);
        t.r2 = t.l1 + ffn_out;
        t.out = layernorm_forward(t.r2, p.ln_ffn, cfg.layernorm_epsilon, t.ln2);
        x = t.out;
    }
    trace.out = x;
    return trace;
}

Matrix encode(const TokenSeq& input, const std::vector<int>& globals, const ModelParams& params,
              const ModelConfig& cfg) {
    return encode_with_trace(input, globals, params, cfg).out;
}

DecoderTrace decode_with_trace(const Matrix& encoder_out, const TokenSeq& encoder_ids,
                               const TokenSeq& target_prefix, const ModelParams& params,
                               const ModelConfig& cfg) {
    cfg.validate();
    if (target_prefix.empty()) {
        throw std::invalid_argument("decode: target prefix must be non-empty");
    }
    DecoderTrace trace;
    trace.prefix = target_prefix;
    trace.embedded = embed(target_prefix, params, cfg, "decode");
    trace.causal = causal_allowed(target_prefix);
    trace.cross = cross_allowed(static_cast<int>(target_prefix.size()), encoder_ids);

    Matrix x = trace.embedded;
    trace.layers.resize(static_cast<std::size_t>(cfg.decoder_layers));
    const bool cross_first = cfg.decoder_order == DecoderOrder::CrossThenSelf;
    for (int l = 0; l < cfg.decoder_layers; ++l) {
        const DecoderLayerParams& p = params.decoder[static_cast<std::size_t>(l)];
        DecoderLayerTrace& t = trace.layers[static_cast<std::size_t>(l)];

        const Matrix first_out =
            cross_first
                ? attention_layer_forward(x, encoder_out, p.cross, cfg.n_heads, trace.cross, t.first)
                : attention_layer_forward(x, x, p.self_attn, cfg.n_heads, trace.causal, t.first);
        t.r1 = x + first_out;
        t.l1 = layernorm_forward(t.r1, p.ln_first, cfg.layernorm_epsilon, t.ln1);

        const Matrix second_out =
            cross_first
                ? attention_layer_forward(t.l1, t.l1, p.self_attn, cfg.n_heads, trace.causal,
                                          t.second)
                : attention_layer_forward(t.l1, encoder_out, p.cross, cfg.n_heads, trace.cross,
                                          t.second);
        t.r2 = t.l1 + second_out;
        t.l2 = layernorm_forward(t.r2, p.ln_second, cfg.layernorm_epsilon, t.ln2);

        const Matrix ffn_out = ffn_forward(t.l2, p.ffn, t.ffn);
        t.r3 = t.l2 + ffn_out;
        t.out = layernorm_forward(t.r3, p.ln_ffn, cfg.layernorm_epsilon, t.ln3);
        x = t.out;
    }
    trace.hidden = x;
    trace.logits = x * params.output_head;
    return trace;
}

Matrix decode(const Matrix& encoder_out, const TokenSeq& encoder_ids,
              const TokenSeq& target_prefix, const ModelParams& params, const ModelConfig& cfg) {
    return decode_with_trace(encoder_out, encoder_ids, target_prefix, params, cfg).logits;
}

double cross_entropy_loss(const Matrix& logits, const TokenSeq& targets) {
    if (static_cast<Eigen::Index>(targets.size()) != logits.rows()) {
        throw std::invalid_argument("loss: target count does not match logit rows");
    }
    double total = 0.0;
    int counted = 0;
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        const TokenId target = targets[static_cast<std::size_t>(i)];
        if (target == PAD) continue;
        if (target < 0 || target >= logits.cols()) {
            throw std::invalid_argument("loss: target id outside vocabulary");
        }
        const double max_logit = logits.row(i).maxCoeff();
        const double lse = max_logit + std::log((logits.row(i).array() - max_logit).exp().sum());
        total += lse - logits(i, target);
        ++counted;
    }
    if (counted == 0) {
        throw std::invalid_argument("loss: every target position is PAD");
    }
    return total / static_cast<double>(counted);
}

Matrix cross_entropy_backward(const Matrix& logits, const TokenSeq& targets, double scale) {
    int counted = 0;
    for (TokenId t : targets.ids) {
        if (t != PAD) ++counted;
    }
    if (counted == 0) {
        throw std::invalid_argument("loss: every target position is PAD");
    }
    const double w = scale / static_cast<double>(counted);
    Matrix d_logits = Matrix::Zero(logits.rows(), logits.cols());
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        const TokenId target = targets[static_cast<std::size_t>(i)];
        if (target == PAD) continue;
        const double max_logit = logits.row(i).maxCoeff();
        Eigen::RowVectorXd probs = (logits.row(i).array() - max_logit).exp().matrix();
        probs /= probs.sum();
        d_logits.row(i) = w * probs;
        d_logits(i, target) -= w;
    }
    return d_logits;
}

ForwardTrace forward(const TokenSeq& input, const std::vector<int>& globals,
                     const TokenSeq& target_prefix, const TokenSeq& targets,
                     const ModelParams& params, const ModelConfig& cfg) {
    ForwardTrace trace;
    trace.enc = encode_with_trace(input, globals, params, cfg);
    trace.dec = decode_with_trace(trace.enc.out, input, target_prefix, params, cfg);
    trace.targets = targets;
    trace.loss = cross_entropy_loss(trace.dec.logits, targets);
    return trace;
}

ModelGrads backward(const ForwardTrace& trace, const ModelParams& params, const ModelConfig& cfg,
                    double scale) {
    ModelGrads grads = zeros_like(params);

    Matrix d_logits = cross_entropy_backward(trace.dec.logits, trace.targets, scale);
    grads.output_head += trace.dec.hidden.transpose() * d_logits;
    Matrix d_x = d_logits * params.output_head.transpose();

    Matrix d_enc = Matrix::Zero(trace.enc.out.rows(), trace.enc.out.cols());
    const bool cross_first = cfg.decoder_order == DecoderOrder::CrossThenSelf;
    for (int l = cfg.decoder_layers - 1; l >= 0; --l) {
        const DecoderLayerParams& p = params.decoder[static_cast<std::size_t>(l)];
        DecoderLayerParams& g = grads.decoder[static_cast<std::size_t>(l)];
        const DecoderLayerTrace& t = trace.dec.layers[static_cast<std::size_t>(l)];

        const Matrix d_r3 = layernorm_backward(d_x, t.ln3, p.ln_ffn, g.ln_ffn);
        Matrix d_l2 = d_r3 + ffn_backward(d_r3, t.ffn, p.ffn, g.ffn);

        const Matrix d_r2 = layernorm_backward(d_l2, t.ln2, p.ln_second, g.ln_second);
        Matrix d_l1 = d_r2;
        {
            Matrix d_q_in, d_kv_in;
            if (cross_first) {
                attention_layer_backward(d_r2, t.second, p.self_attn, cfg.n_heads, g.self_attn,
                                         d_q_in, d_kv_in);
                d_l1 += d_q_in + d_kv_in;
            } else {
                attention_layer_backward(d_r2, t.second, p.cross, cfg.n_heads, g.cross, d_q_in,
                                         d_kv_in);
                d_l1 += d_q_in;
                d_enc += d_kv_in;
            }
        }

        const Matrix d_r1 = layernorm_backward(d_l1, t.ln1, p.ln_first, g.ln_first);
        d_x = d_r1;
        {
            Matrix d_q_in, d_kv_in;
            if (cross_first) {
                attention_layer_backward(d_r1, t.first, p.cross, cfg.n_heads, g.cross, d_q_in,
                                         d_kv_in);
                d_x += d_q_in;
                d_enc += d_kv_in;
            } else {
                attention_layer_backward(d_r1, t.first, p.self_attn, cfg.n_heads, g.self_attn,
                                         d_q_in, d_kv_in);
                d_x += d_q_in + d_kv_in;
            }
        }
    }
    for (Eigen::Index i = 0; i < d_x.rows(); ++i) {
        grads.token_embedding.row(trace.dec.prefix[static_cast<std::size_t>(i)]) += d_x.row(i);
        grads.position_embedding.row(i) += d_x.row(i);
    }

    Matrix d_h = d_enc;
    for (int l = cfg.encoder_layers - 1; l >= 0; --l) {
        const EncoderLayerParams& p = params.encoder[static_cast<std::size_t>(l)];
        EncoderLayerParams& g = grads.encoder[static_cast<std::size_t>(l)];
        const EncoderLayerTrace& t = trace.enc.layers[static_cast<std::size_t>(l)];

        const Matrix d_r2 = layernorm_backward(d_h, t.ln2, p.ln_ffn, g.ln_ffn);
        Matrix d_l1 = d_r2 + ffn_backward(d_r2, t.ffn, p.ffn, g.ffn);

        const Matrix d_r1 = layernorm_backward(d_l1, t.ln1, p.ln_attn, g.ln_attn);
        Matrix d_q_in, d_kv_in;
        attention_layer_backward(d_r1, t.attn, p.attn, cfg.n_heads, g.attn, d_q_in, d_kv_in);
        d_h = d_r1 + d_q_in + d_kv_in;
    }
    for (Eigen::Index i = 0; i < d_h.rows(); ++i) {
        grads.token_embedding.row(trace.enc.ids[static_cast<std::size_t>(i)]) += d_h.row(i);
        grads.position_embedding.row(i) += d_h.row(i);
    }
    return grads;
}

Vector log_softmax(const Vector& logits) {
    const double max_logit = logits.maxCoeff();
    const double lse = max_logit + std::log((logits.array() - max_logit).exp().sum());
    return (logits.array() - lse).matrix();
}

}  // namespace egad
