#include "nn/forward.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nn {

std::vector<double> softmax(const std::vector<double>& logits) {
    if (logits.empty()) throw std::invalid_argument("softmax: empty input");
    double max_logit = -std::numeric_limits<double>::infinity();
    for (double x : logits) {
        if (!std::isfinite(x)) throw std::invalid_argument("softmax: non-finite input");
        max_logit = std::max(max_logit, x);
    }
    std::vector<double> probs(logits.size());
    double sum = 0.0;
    for (size_t i = 0; i < logits.size(); ++i) {
        probs[i] = std::exp(logits[i] - max_logit);
        sum += probs[i];
    }
    for (auto& p : probs) p /= sum;
    return probs;
}

namespace {

// y = M x with M row-major (rows x cols)
void matvec(const double* m, int rows, int cols, const double* x, double* y) {
    for (int r = 0; r < rows; ++r) {
        double acc = 0.0;
        const double* row = m + static_cast<size_t>(r) * cols;
        for (int c = 0; c < cols; ++c) acc += row[c] * x[c];
        y[r] = acc;
    }
}

void layernorm_row(const double* x, int dim, const double* gain, const double* bias, double* out) {
    double mean = 0.0;
    for (int i = 0; i < dim; ++i) mean += x[i];
    mean /= dim;
    double var = 0.0;
    for (int i = 0; i < dim; ++i) var += (x[i] - mean) * (x[i] - mean);
    var /= dim;
    const double inv = 1.0 / std::sqrt(var + kLayerNormEps);
    for (int i = 0; i < dim; ++i) out[i] = (x[i] - mean) * inv * gain[i] + bias[i];
}

} // namespace

HeadResult attention_head_forward(const std::vector<double>& wq, const std::vector<double>& wk,
                                  const std::vector<double>& wv, int dim_q, int dim_in, int dim_v,
                                  const std::vector<double>& xs, int len, int pos,
                                  bool bidirectional) {
    if (len < 1 || pos < 0 || pos >= len)
        throw std::invalid_argument("attention_head_forward: bad position");
    if (xs.size() != static_cast<size_t>(len) * dim_in)
        throw std::invalid_argument("attention_head_forward: bad stream size");
    const int limit = bidirectional ? len : pos + 1;

    std::vector<double> q(dim_q);
    matvec(wq.data(), dim_q, dim_in, xs.data() + static_cast<size_t>(pos) * dim_in, q.data());

    std::vector<double> logits(limit);
    std::vector<double> k(dim_q);
    for (int j = 0; j < limit; ++j) {
        matvec(wk.data(), dim_q, dim_in, xs.data() + static_cast<size_t>(j) * dim_in, k.data());
        double acc = 0.0;
        for (int c = 0; c < dim_q; ++c) acc += k[c] * q[c];
        logits[j] = acc;
    }
    const std::vector<double> a = softmax(logits);

    HeadResult result;
    result.out.assign(dim_v, 0.0);
    result.weights.assign(len, 0.0);
    std::vector<double> v(dim_v);
    for (int j = 0; j < limit; ++j) {
        matvec(wv.data(), dim_v, dim_in, xs.data() + static_cast<size_t>(j) * dim_in, v.data());
        for (int r = 0; r < dim_v; ++r) result.out[r] += a[j] * v[r];
        result.weights[j] = a[j];
    }
    return result;
}

std::vector<double> mlp_forward(const Mlp& mlp, int dim_in, const std::vector<double>& x) {
    if (x.size() != static_cast<size_t>(dim_in))
        throw std::invalid_argument("mlp_forward: bad input size");
    const int H = mlp.hidden_dim;
    const int D_out = static_cast<int>(mlp.b2.size());
    std::vector<double> hidden(H);
    matvec(mlp.w1.data(), H, dim_in, x.data(), hidden.data());
    for (int i = 0; i < H; ++i) hidden[i] = std::max(0.0, hidden[i] + mlp.b1[i]);
    std::vector<double> out(D_out);
    matvec(mlp.w2.data(), D_out, H, hidden.data(), out.data());
    for (int i = 0; i < D_out; ++i) out[i] += mlp.b2[i];
    return out;
}

std::vector<double> model_forward_all(const TransformerModel& model,
                                      const std::vector<int>& tokens) {
    const auto& cfg = model.config;
    const int D = cfg.model_dim;
    const int len = static_cast<int>(tokens.size());
    if (len < 1) throw std::invalid_argument("model_forward: empty sequence");
    if (len > cfg.context_len) throw std::invalid_argument("model_forward: sequence too long");
    for (int t : tokens)
        if (t < 0 || t >= cfg.vocab_size)
            throw std::invalid_argument("model_forward: token out of vocabulary");

    std::vector<double> stream(static_cast<size_t>(len) * D);
    for (int i = 0; i < len; ++i)
        for (int c = 0; c < D; ++c)
            stream[static_cast<size_t>(i) * D + c] =
                model.token_embeddings[static_cast<size_t>(tokens[i]) * D + c] +
                model.positional_embeddings[static_cast<size_t>(i) * D + c];

    std::vector<double> base(static_cast<size_t>(len) * D);
    for (int l = 0; l < cfg.n_layers; ++l) {
        const auto& layer = model.layers[l];
        const bool bidir = cfg.layer_bidirectional(l);

        if (cfg.use_layer_norm) {
            for (int i = 0; i < len; ++i)
                layernorm_row(stream.data() + static_cast<size_t>(i) * D, D,
                              layer.ln1_gain.data(), layer.ln1_bias.data(),
                              base.data() + static_cast<size_t>(i) * D);
        } else {
            base = stream;
        }
        for (int i = 0; i < len; ++i) {
            for (int h = 0; h < cfg.n_heads; ++h) {
                const auto& head = layer.heads[h];
                HeadResult r = attention_head_forward(head.wq, head.wk, head.wv, cfg.head_dim, D,
                                                      D, base, len, i, bidir);
                // concatenated head outputs: head h contributes its own slice
                for (int c = 0; c < cfg.head_dim; ++c)
                    stream[static_cast<size_t>(i) * D + h * cfg.head_dim + c] +=
                        r.out[h * cfg.head_dim + c];
            }
        }

        if (cfg.use_layer_norm) {
            for (int i = 0; i < len; ++i)
                layernorm_row(stream.data() + static_cast<size_t>(i) * D, D,
                              layer.ln2_gain.data(), layer.ln2_bias.data(),
                              base.data() + static_cast<size_t>(i) * D);
        } else {
            base = stream;
        }
        for (int i = 0; i < len; ++i) {
            std::vector<double> x(base.begin() + static_cast<size_t>(i) * D,
                                  base.begin() + static_cast<size_t>(i + 1) * D);
            std::vector<double> out = mlp_forward(layer.mlp, D, x);
            for (int c = 0; c < D; ++c) stream[static_cast<size_t>(i) * D + c] += out[c];
        }
    }
    return stream;
}

double model_forward(const TransformerModel& model, const std::vector<int>& tokens) {
    const int D = model.config.model_dim;
    const std::vector<double> stream = model_forward_all(model, tokens);
    const double* last = stream.data() + stream.size() - D;
    double y = 0.0;
    if (model.config.use_layer_norm) {
        std::vector<double> normed(D);
        layernorm_row(last, D, model.final_ln_gain.data(), model.final_ln_bias.data(),
                      normed.data());
        for (int c = 0; c < D; ++c) y += model.readout[c] * normed[c];
    } else {
        for (int c = 0; c < D; ++c) y += model.readout[c] * last[c];
    }
    return y;
}

} // namespace nn
