#include <cmath>
#include <stdexcept>

#include "constructions/mfe.hpp"
#include "nn/forward.hpp"

namespace constructions {

namespace {

int tournament_rounds(int m) {
    int rounds = 0;
    while ((1 << rounds) < m) ++rounds;
    return rounds;
}

struct Pair {
    int left;
    int right;
};

std::vector<Pair> round_pairs(int m, int round) { // round is 1-based
    std::vector<Pair> pairs;
    const int stride = 1 << (round - 1);
    for (int left = 0; left + stride < m; left += 2 * stride)
        pairs.push_back({left, left + stride});
    return pairs;
}

} // namespace

MaxNet build_max_mlp(int m) {
    if (m < 1) throw std::invalid_argument("build_max_mlp: m must be positive");
    MaxNet net;
    net.input_dim = m;
    const int rounds = tournament_rounds(m);
    for (int r = 1; r <= rounds; ++r) {
        const auto pairs = round_pairs(m, r);
        nn::Mlp stage;
        stage.hidden_dim = static_cast<int>(pairs.size());
        stage.w1.assign(pairs.size() * static_cast<size_t>(m), 0.0);
        stage.b1.assign(pairs.size(), 0.0);
        stage.w2.assign(static_cast<size_t>(m) * pairs.size(), 0.0);
        stage.b2.assign(static_cast<size_t>(m), 0.0);
        for (size_t u = 0; u < pairs.size(); ++u) {
            stage.w1[u * m + static_cast<size_t>(pairs[u].right)] = 1.0;
            stage.w1[u * m + static_cast<size_t>(pairs[u].left)] = -1.0;
            stage.w2[static_cast<size_t>(pairs[u].left) * pairs.size() + u] = 1.0;
        }
        net.stages.push_back(std::move(stage));
    }
    return net;
}

double max_net_eval(const MaxNet& net, std::vector<double> x) {
    if (static_cast<int>(x.size()) != net.input_dim)
        throw std::invalid_argument("max_net_eval: dimension mismatch");
    if (x.empty()) throw std::invalid_argument("max_net_eval: empty input");
    for (const auto& stage : net.stages) {
        const auto delta = nn::mlp_forward(stage, net.input_dim, x);
        for (size_t c = 0; c < x.size(); ++c) x[c] += delta[c];
    }
    return x[0];
}

ConstructionReport build_mfe_histogram(int m, int n) {
    if (m < 1) throw std::invalid_argument("build_mfe_histogram: m must be positive");
    if (n < 1) throw std::invalid_argument("build_mfe_histogram: n must be positive");

    const MaxNet net = build_max_mlp(m);
    const int n_layers = std::max(1, static_cast<int>(net.stages.size()));
    int width = 1;
    for (const auto& stage : net.stages) width = std::max(width, stage.hidden_dim);

    const int D = 2 * m;
    nn::TransformerConfig cfg;
    cfg.n_layers = n_layers;
    cfg.n_heads = 1;
    cfg.head_dim = D;
    cfg.model_dim = D;
    cfg.vocab_size = m;
    cfg.context_len = n;
    cfg.use_layer_norm = false;
    cfg.use_positional = false;

    nn::TransformerModel model = nn::zero_model(cfg, width);
    for (int t = 0; t < m; ++t) model.token_embeddings[static_cast<size_t>(t) * D + m + t] = 1.0;

    // Layer 0 averages the one-hots into 0..m-1; later layers have all-zero
    // attention (uniform weights times V = 0 add nothing) and only run their
    // tournament stage.
    nn::AttentionHead& head = model.layers[0].heads[0];
    for (int i = 0; i < m; ++i) head.wv[static_cast<size_t>(i) * D + m + i] = 1.0;

    for (size_t s = 0; s < net.stages.size(); ++s) {
        const nn::Mlp& stage = net.stages[s];
        nn::Mlp& mlp = model.layers[s].mlp;
        for (int u = 0; u < stage.hidden_dim; ++u)
            for (int c = 0; c < m; ++c)
                mlp.w1[static_cast<size_t>(u) * D + c] =
                    stage.w1[static_cast<size_t>(u) * m + c];
        for (int c = 0; c < m; ++c)
            for (int u = 0; u < stage.hidden_dim; ++u)
                mlp.w2[static_cast<size_t>(c) * width + u] =
                    stage.w2[static_cast<size_t>(c) * stage.hidden_dim + u];
    }
    model.readout[0] = static_cast<double>(n);

    ConstructionReport report;
    report.model = std::move(model);
    report.certified_n = n;
    report.mlp_width = width;
    report.temperature = 0;
    report.max_cross_inner = 0;
    return report;
}

ConstructionReport build_mfe_two_layer(int m, int d, int n, const EmbeddingSet& embeddings) {
    embeddings.validate();
    if (embeddings.m != m || embeddings.d != d)
        throw std::invalid_argument("build_mfe_two_layer: embeddings do not match m, d");
    if (embeddings.kind != EmbeddingKind::one_hot || d != m)
        throw std::invalid_argument("build_mfe_two_layer: requires one-hot embeddings with d = m");
    if (n < 1) throw std::invalid_argument("build_mfe_two_layer: n must be positive");

    const double T = std::ceil(n * static_cast<double>(n) * std::log(4.0 * n * n * n));
    const int width = std::max(1, m * (n - 1));
    const int D = 2 * m + 2; // one-hot block, histogram block, 1/count scratch, output

    nn::TransformerConfig cfg;
    cfg.n_layers = 2;
    cfg.n_heads = 1;
    cfg.head_dim = D;
    cfg.model_dim = D;
    cfg.vocab_size = m;
    cfg.context_len = n;
    cfg.use_layer_norm = false;
    cfg.use_positional = false;
    cfg.bidirectional = {1, 0};

    nn::TransformerModel model = nn::zero_model(cfg, width);
    for (int t = 0; t < m; ++t) model.token_embeddings[static_cast<size_t>(t) * D + t] = 1.0;

    // Layer 0, bidirectional, Q = 0: coordinate m+t becomes count_t/n at
    // every position.
    nn::AttentionHead& head0 = model.layers[0].heads[0];
    for (int t = 0; t < m; ++t) head0.wv[static_cast<size_t>(m + t) * D + t] = 1.0;

    // Units (t, k): relu(onehot_t + count_t/n - 1 - k/n) is zero unless
    // t = x_i, where it equals relu((count - k)/n). Summed with the chord
    // slopes of the interpolant through (k/n, 1/k), plus b2 = 1, the scratch
    // coordinate lands on exactly 1/count(x_i).
    nn::Mlp& mlp0 = model.layers[0].mlp;
    double prev_slope = 0;
    for (int k = 1; k <= n - 1; ++k) {
        const double slope = -static_cast<double>(n) / (static_cast<double>(k) * (k + 1));
        const double beta = slope - prev_slope;
        prev_slope = slope;
        for (int t = 0; t < m; ++t) {
            const size_t u = static_cast<size_t>((k - 1) * m + t);
            mlp0.w1[u * D + static_cast<size_t>(t)] = 1.0;
            mlp0.w1[u * D + static_cast<size_t>(m + t)] = 1.0;
            mlp0.b1[u] = -1.0 - static_cast<double>(k) / n;
            mlp0.w2[static_cast<size_t>(2 * m) * width + u] = beta;
        }
    }
    mlp0.b2[static_cast<size_t>(2 * m)] = 1.0;

    // Layer 1, causal: logit_j = -T * scratch_j = -T / count_j; V moves the
    // scratch into the output coordinate, so the last position reads a
    // weighted mean of 1/count crowded onto the maximum counts.
    nn::AttentionHead& head1 = model.layers[1].heads[0];
    head1.wk[static_cast<size_t>(0) * D + 2 * m] = 1.0;
    for (int t = 0; t < m; ++t) head1.wq[static_cast<size_t>(0) * D + t] = -T;
    head1.wv[static_cast<size_t>(2 * m + 1) * D + 2 * m] = 1.0;

    model.readout[static_cast<size_t>(2 * m + 1)] = 1.0;

    ConstructionReport report;
    report.model = std::move(model);
    report.certified_n = n;
    report.mlp_width = width;
    report.temperature = T;
    report.max_cross_inner = 0;
    return report;
}

int decode_mfe_two_layer(double output, int n) {
    if (n < 1) throw std::invalid_argument("decode_mfe_two_layer: n must be positive");
    int best = 1;
    double best_gap = std::abs(output - 1.0);
    for (int k = 2; k <= n; ++k) {
        const double gap = std::abs(output - 1.0 / k);
        if (gap < best_gap) {
            best_gap = gap;
            best = k;
        }
    }
    return best;
}

} // namespace constructions
