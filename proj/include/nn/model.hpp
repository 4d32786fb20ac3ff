#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace nn {

// Decoder-style transformer, double precision everywhere.
//
//   stream_i = tok_emb[x_i] + pos_emb[i]
//   per layer: stream += concat_heads(attention(ln1(stream)))
//              stream += mlp(ln2(stream))
//   output    = readout . ln_f(stream_last)
//
// Layer norms are optional; with use_layer_norm=false the ln() calls above are
// identity and no norm parameters are stored. Attention is causal per layer
// unless that layer is listed bidirectional. Logits are plain dot products
// (no 1/sqrt(d) scaling): logit_{ij} = (K x_j) . (Q x_i).
struct TransformerConfig {
    int n_layers = 0;
    int n_heads = 1;
    int head_dim = 1;    // d
    int model_dim = 1;   // D == head_dim * n_heads
    int vocab_size = 1;  // m
    int context_len = 1; // n, maximum sequence length
    bool use_layer_norm = false;
    bool use_positional = false;
    std::vector<uint8_t> bidirectional; // per layer; empty means all causal

    void validate() const; // throws std::invalid_argument on inconsistency
    bool layer_bidirectional(int layer) const {
        return !bidirectional.empty() && bidirectional.at(layer) != 0;
    }
};

// Per-head projections, stored row-major as (rows x model_dim).
// wq, wk: head_dim x D. wv: D x D; only the rows of this head's output slice
// [head*d, head*d+d) enter the layer output, the rest are inert (they exist so
// hand-set weights can write into any coordinate when n_heads == 1).
struct AttentionHead {
    std::vector<double> wq, wk, wv;
};

struct Mlp {
    int hidden_dim = 0;
    std::vector<double> w1, b1; // hidden x D, hidden
    std::vector<double> w2, b2; // D x hidden, D
};

struct TransformerLayer {
    std::vector<AttentionHead> heads;
    Mlp mlp;
    std::vector<double> ln1_gain, ln1_bias; // empty unless use_layer_norm
    std::vector<double> ln2_gain, ln2_bias;
};

struct TransformerModel {
    TransformerConfig config;
    std::vector<double> token_embeddings;      // m x D
    std::vector<double> positional_embeddings; // n x D, zero when !use_positional
    std::vector<TransformerLayer> layers;
    std::vector<double> final_ln_gain, final_ln_bias; // empty unless use_layer_norm
    std::vector<double> readout; // D

    void validate() const; // shape and finiteness checks, throws
};

// All-zero model with the given shape (MLP hidden width per layer).
TransformerModel zero_model(const TransformerConfig& cfg, int mlp_hidden);

// Model with every tensor drawn i.i.d. N(0, 1/sqrt(D)); layer norm gains 1,
// biases 0. Used by tests and as the training start point.
TransformerModel random_model(const TransformerConfig& cfg, int mlp_hidden, uint64_t seed);

constexpr double kLayerNormEps = 1e-5;

} // namespace nn
