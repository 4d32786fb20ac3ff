#include <cmath>
#include <stdexcept>

#include "analysis/bounds.hpp"
#include "constructions/qc.hpp"

namespace constructions {

double default_inverter_eps(int n) { return 1.0 / (4.0 * n * (n + 1.0)); }

nn::Mlp build_inverter_mlp(int n, double eps) {
    if (n < 1) throw std::invalid_argument("build_inverter_mlp: n must be positive");
    if (!(eps > 0) || eps > 1.0 / (2.0 * n * (n + 1.0)))
        throw std::invalid_argument("build_inverter_mlp: bumps would overlap");

    // Bump k: up-ramp on (a_k - eps, a_k), plateau k on [a_k, b_k - eps],
    // down-ramp on (b_k - eps, b_k) with a_k = 1/(k+1/2), b_k = 1/(k-1/2).
    // Bump k+1's support ends exactly at a_k, so every w in (a_k, 1/k] sees
    // bump k alone.
    nn::Mlp mlp;
    mlp.hidden_dim = 4 * n;
    mlp.w1.assign(static_cast<size_t>(4 * n), 1.0);
    mlp.b1.resize(static_cast<size_t>(4 * n));
    mlp.w2.resize(static_cast<size_t>(4 * n));
    mlp.b2.assign(1, 0.0);
    for (int k = 1; k <= n; ++k) {
        const double a = 1.0 / (k + 0.5);
        const double b = 1.0 / (k - 0.5);
        const double s = k / eps;
        const size_t u = static_cast<size_t>(4 * (k - 1));
        mlp.b1[u + 0] = -(a - eps);
        mlp.b1[u + 1] = -a;
        mlp.b1[u + 2] = -(b - eps);
        mlp.b1[u + 3] = -b;
        mlp.w2[u + 0] = s;
        mlp.w2[u + 1] = -s;
        mlp.w2[u + 2] = -s;
        mlp.w2[u + 3] = s;
    }
    return mlp;
}

nn::Mlp build_inverter_mlp(int n) { return build_inverter_mlp(n, default_inverter_eps(n)); }

ConstructionReport build_qc_countattend(int m, int d, int n, const EmbeddingSet& embeddings) {
    embeddings.validate();
    if (embeddings.m != m || embeddings.d != d)
        throw std::invalid_argument("build_qc_countattend: embeddings do not match m, d");
    if (n < 1) throw std::invalid_argument("build_qc_countattend: n must be positive");

    double J = 0;
    if (m >= 2) J = analysis::max_pairwise_inner(embeddings).value;
    if (J >= 1.0 - 1e-6)
        throw std::invalid_argument("build_qc_countattend: temperature would diverge");
    const double T = analysis::required_temperature(n, J);

    const int D = d + 2; // token block, positional flag, scratch
    nn::TransformerConfig cfg;
    cfg.n_layers = 1;
    cfg.n_heads = 1;
    cfg.head_dim = D;
    cfg.model_dim = D;
    cfg.vocab_size = m;
    cfg.context_len = n;
    cfg.use_layer_norm = false;
    cfg.use_positional = true;

    nn::TransformerModel model = nn::zero_model(cfg, 4 * n);
    for (int t = 0; t < m; ++t)
        for (int c = 0; c < d; ++c)
            model.token_embeddings[static_cast<size_t>(t) * D + c] =
                embeddings.vectors[static_cast<size_t>(t)][static_cast<size_t>(c)];
    model.positional_embeddings[static_cast<size_t>(n - 1) * D + d] = 1.0;

    // K = I, Q = T*I on the token block: logit_j = T * (v_{x_j} . v_{x_i}).
    // V lifts the positional flag into the scratch coordinate, so the
    // attention output's scratch entry at the last position is w_n.
    nn::AttentionHead& head = model.layers[0].heads[0];
    for (int c = 0; c < D; ++c) head.wk[static_cast<size_t>(c) * D + c] = 1.0;
    for (int c = 0; c < d; ++c) head.wq[static_cast<size_t>(c) * D + c] = T;
    head.wv[static_cast<size_t>(d + 1) * D + d] = 1.0;

    // The inverter reads the scratch coordinate and writes the count onto the
    // flag coordinate; b2 = -1 cancels the flag itself.
    const nn::Mlp inv = build_inverter_mlp(n);
    nn::Mlp& mlp = model.layers[0].mlp;
    for (int u = 0; u < 4 * n; ++u) {
        mlp.w1[static_cast<size_t>(u) * D + d + 1] = inv.w1[static_cast<size_t>(u)];
        mlp.b1[static_cast<size_t>(u)] = inv.b1[static_cast<size_t>(u)];
        mlp.w2[static_cast<size_t>(d) * (4 * n) + u] = inv.w2[static_cast<size_t>(u)];
    }
    mlp.b2[static_cast<size_t>(d)] = -1.0;
    model.readout[static_cast<size_t>(d)] = 1.0;

    ConstructionReport report;
    report.model = std::move(model);
    report.certified_n = n;
    report.mlp_width = 4 * n;
    report.temperature = T;
    report.max_cross_inner = J;
    return report;
}

double hist_eval(const EmbeddingSet& embeddings, const std::vector<int>& seq) {
    embeddings.validate();
    if (seq.empty()) throw std::invalid_argument("hist_eval: empty sequence");
    std::vector<double> sum(static_cast<size_t>(embeddings.d), 0.0);
    for (int tok : seq) {
        if (tok < 0 || tok >= embeddings.m)
            throw std::invalid_argument("hist_eval: token outside embedding set");
        const auto& v = embeddings.vectors[static_cast<size_t>(tok)];
        for (int c = 0; c < embeddings.d; ++c) sum[static_cast<size_t>(c)] += v[static_cast<size_t>(c)];
    }
    const auto& q = embeddings.vectors[static_cast<size_t>(seq.back())];
    double out = 0;
    for (int c = 0; c < embeddings.d; ++c) out += q[static_cast<size_t>(c)] * sum[static_cast<size_t>(c)];
    return out;
}

AdversarialInput adversarial_welch_input(const EmbeddingSet& embeddings, int n) {
    embeddings.validate();
    if (embeddings.m < 2 * embeddings.d)
        throw std::invalid_argument("adversarial_welch_input: requires m >= 2d");
    if (n < 2 || n % 2 != 0)
        throw std::invalid_argument("adversarial_welch_input: n must be even and positive");

    const analysis::MaxInnerPair worst = analysis::max_pairwise_inner(embeddings);
    AdversarialInput adv;
    adv.seq.assign(static_cast<size_t>(n / 2), worst.i);
    adv.seq.insert(adv.seq.end(), static_cast<size_t>(n / 2), worst.j);
    adv.error_lower_bound = 0.5 * n * worst.value;
    return adv;
}

} // namespace constructions
