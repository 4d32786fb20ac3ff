#include <cmath>
#include <stdexcept>

#include "constructions/qc.hpp"

namespace constructions {

ConstructionReport build_qc_histogram(int m, int n, double B) {
    if (m < 1) throw std::invalid_argument("build_qc_histogram: m must be positive");
    if (n < 1) throw std::invalid_argument("build_qc_histogram: n must be positive");
    if (!(B > n)) throw std::invalid_argument("build_qc_histogram: B must exceed n");

    const int D = 2 * m;
    nn::TransformerConfig cfg;
    cfg.n_layers = 1;
    cfg.n_heads = 1;
    cfg.head_dim = D;
    cfg.model_dim = D;
    cfg.vocab_size = m;
    // room for the duplication probe; the construction is certified at n only
    cfg.context_len = 2 * n;
    cfg.use_layer_norm = false;
    cfg.use_positional = false;

    nn::TransformerModel model = nn::zero_model(cfg, m);
    for (int t = 0; t < m; ++t) model.token_embeddings[static_cast<size_t>(t) * D + m + t] = 1.0;

    // Q = 0: uniform attention. V drops the one-hot from the residual block
    // into coordinates 0..m-1, so the head output is the normalized histogram.
    nn::AttentionHead& head = model.layers[0].heads[0];
    for (int i = 0; i < m; ++i) head.wv[static_cast<size_t>(i) * D + m + i] = 1.0;

    // gate_i = relu(n*hist_i - B*(1 - onehot_i)); only the query bin survives.
    nn::Mlp& mlp = model.layers[0].mlp;
    for (int i = 0; i < m; ++i) {
        mlp.w1[static_cast<size_t>(i) * D + i] = static_cast<double>(n);
        mlp.w1[static_cast<size_t>(i) * D + m + i] = B;
        mlp.b1[static_cast<size_t>(i)] = -B;
    }
    // The gate sum lands on the residual one-hot block; b2 = -1 cancels the
    // block's own sum (exactly 1), so reading the whole block gives the count.
    for (int i = 0; i < m; ++i) mlp.w2[static_cast<size_t>(m) * m + i] = 1.0;
    mlp.b2[static_cast<size_t>(m)] = -1.0;
    for (int i = 0; i < m; ++i) model.readout[static_cast<size_t>(m + i)] = 1.0;

    ConstructionReport report;
    report.model = std::move(model);
    report.certified_n = n;
    report.mlp_width = m;
    report.temperature = 0;
    report.max_cross_inner = 0;
    return report;
}

ConstructionReport build_qc_histogram(int m, int n) {
    return build_qc_histogram(m, n, 2.0 * n * n);
}

} // namespace constructions
