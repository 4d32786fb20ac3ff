#include "nn/model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "util/rng.hpp"

namespace nn {

void TransformerConfig::validate() const {
    if (n_layers < 0) throw std::invalid_argument("config: n_layers < 0");
    if (n_heads < 1) throw std::invalid_argument("config: n_heads < 1");
    if (head_dim < 1) throw std::invalid_argument("config: head_dim < 1");
    if (model_dim != head_dim * n_heads)
        throw std::invalid_argument("config: model_dim != head_dim * n_heads");
    if (vocab_size < 1) throw std::invalid_argument("config: vocab_size < 1");
    if (context_len < 1) throw std::invalid_argument("config: context_len < 1");
    if (!bidirectional.empty() && static_cast<int>(bidirectional.size()) != n_layers)
        throw std::invalid_argument("config: bidirectional flag count != n_layers");
}

namespace {

void check_size(const std::vector<double>& v, size_t want, const char* name) {
    if (v.size() != want)
        throw std::invalid_argument(std::string("model: bad tensor size for ") + name);
}

void check_finite(const std::vector<double>& v, const char* name) {
    for (double x : v)
        if (!std::isfinite(x))
            throw std::invalid_argument(std::string("model: non-finite entry in ") + name);
}

} // namespace

void TransformerModel::validate() const {
    config.validate();
    const size_t D = static_cast<size_t>(config.model_dim);
    const size_t d = static_cast<size_t>(config.head_dim);
    check_size(token_embeddings, static_cast<size_t>(config.vocab_size) * D, "token_embeddings");
    check_size(positional_embeddings, static_cast<size_t>(config.context_len) * D,
               "positional_embeddings");
    check_size(readout, D, "readout");
    if (static_cast<int>(layers.size()) != config.n_layers)
        throw std::invalid_argument("model: layer count != config.n_layers");
    for (const auto& layer : layers) {
        if (static_cast<int>(layer.heads.size()) != config.n_heads)
            throw std::invalid_argument("model: head count != config.n_heads");
        for (const auto& head : layer.heads) {
            check_size(head.wq, d * D, "wq");
            check_size(head.wk, d * D, "wk");
            check_size(head.wv, D * D, "wv");
            check_finite(head.wq, "wq");
            check_finite(head.wk, "wk");
            check_finite(head.wv, "wv");
        }
        const size_t H = static_cast<size_t>(layer.mlp.hidden_dim);
        check_size(layer.mlp.w1, H * D, "mlp.w1");
        check_size(layer.mlp.b1, H, "mlp.b1");
        check_size(layer.mlp.w2, D * H, "mlp.w2");
        check_size(layer.mlp.b2, D, "mlp.b2");
        check_finite(layer.mlp.w1, "mlp.w1");
        check_finite(layer.mlp.b1, "mlp.b1");
        check_finite(layer.mlp.w2, "mlp.w2");
        check_finite(layer.mlp.b2, "mlp.b2");
        if (config.use_layer_norm) {
            check_size(layer.ln1_gain, D, "ln1_gain");
            check_size(layer.ln1_bias, D, "ln1_bias");
            check_size(layer.ln2_gain, D, "ln2_gain");
            check_size(layer.ln2_bias, D, "ln2_bias");
        }
    }
    if (config.use_layer_norm) {
        check_size(final_ln_gain, D, "final_ln_gain");
        check_size(final_ln_bias, D, "final_ln_bias");
    }
    check_finite(token_embeddings, "token_embeddings");
    check_finite(positional_embeddings, "positional_embeddings");
    check_finite(readout, "readout");
}

TransformerModel zero_model(const TransformerConfig& cfg, int mlp_hidden) {
    cfg.validate();
    if (mlp_hidden < 0) throw std::invalid_argument("zero_model: mlp_hidden < 0");
    const size_t D = static_cast<size_t>(cfg.model_dim);
    const size_t d = static_cast<size_t>(cfg.head_dim);
    const size_t H = static_cast<size_t>(mlp_hidden);
    TransformerModel model;
    model.config = cfg;
    model.token_embeddings.assign(static_cast<size_t>(cfg.vocab_size) * D, 0.0);
    model.positional_embeddings.assign(static_cast<size_t>(cfg.context_len) * D, 0.0);
    model.readout.assign(D, 0.0);
    model.layers.resize(cfg.n_layers);
    for (auto& layer : model.layers) {
        layer.heads.resize(cfg.n_heads);
        for (auto& head : layer.heads) {
            head.wq.assign(d * D, 0.0);
            head.wk.assign(d * D, 0.0);
            head.wv.assign(D * D, 0.0);
        }
        layer.mlp.hidden_dim = mlp_hidden;
        layer.mlp.w1.assign(H * D, 0.0);
        layer.mlp.b1.assign(H, 0.0);
        layer.mlp.w2.assign(D * H, 0.0);
        layer.mlp.b2.assign(D, 0.0);
        if (cfg.use_layer_norm) {
            layer.ln1_gain.assign(D, 1.0);
            layer.ln1_bias.assign(D, 0.0);
            layer.ln2_gain.assign(D, 1.0);
            layer.ln2_bias.assign(D, 0.0);
        }
    }
    if (cfg.use_layer_norm) {
        model.final_ln_gain.assign(D, 1.0);
        model.final_ln_bias.assign(D, 0.0);
    }
    return model;
}

TransformerModel random_model(const TransformerConfig& cfg, int mlp_hidden, uint64_t seed) {
    TransformerModel model = zero_model(cfg, mlp_hidden);
    util::Rng rng(seed);
    const double std = 1.0 / std::sqrt(static_cast<double>(cfg.model_dim));
    auto fill = [&](std::vector<double>& v) {
        for (auto& x : v) x = std * rng.next_normal();
    };
    fill(model.token_embeddings);
    if (cfg.use_positional) fill(model.positional_embeddings);
    fill(model.readout);
    for (auto& layer : model.layers) {
        for (auto& head : layer.heads) {
            fill(head.wq);
            fill(head.wk);
            fill(head.wv);
        }
        fill(layer.mlp.w1);
        fill(layer.mlp.b1);
        fill(layer.mlp.w2);
        fill(layer.mlp.b2);
    }
    return model;
}

} // namespace nn
