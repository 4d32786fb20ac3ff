#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "protocol/disjointness.hpp"
#include "protocol/quantize.hpp"

namespace protocol {

void DisjointnessInstance::validate() const {
    if (a.size() != b.size()) throw std::invalid_argument("DisjointnessInstance: length mismatch");
    if (a.empty()) throw std::invalid_argument("DisjointnessInstance: empty");
    for (size_t i = 0; i < a.size(); ++i)
        if (a[i] > 1 || b[i] > 1)
            throw std::invalid_argument("DisjointnessInstance: entries must be bits");
}

int disjointness_oracle(const DisjointnessInstance& inst) {
    inst.validate();
    for (size_t i = 0; i < inst.a.size(); ++i)
        if (inst.a[i] && inst.b[i]) return 1;
    return 0;
}

EncodedInputs encode_inputs(const DisjointnessInstance& inst, int vocab_size) {
    inst.validate();
    const int n = static_cast<int>(inst.a.size());
    if (vocab_size < 3 * n + 1)
        throw std::invalid_argument("encode_inputs: vocabulary too small, needs 3n+1 tokens");
    EncodedInputs enc;
    enc.alice.reserve(static_cast<size_t>(n));
    enc.bob.reserve(static_cast<size_t>(n));
    for (int j = 0; j < n; ++j) {
        enc.alice.push_back(inst.a[static_cast<size_t>(j)] ? j : n + j);
        enc.bob.push_back(inst.b[static_cast<size_t>(j)] ? j : 2 * n + j);
    }
    enc.query = 3 * n;
    return enc;
}

std::vector<ProtocolHead> histogram_heads(int d) {
    if (d < 1) throw std::invalid_argument("histogram_heads: d must be positive");
    ProtocolHead head;
    head.wq.assign(static_cast<size_t>(d) * d, 0.0);
    head.wk.assign(static_cast<size_t>(d) * d, 0.0);
    head.wv.assign(static_cast<size_t>(d) * d, 0.0);
    for (int i = 0; i < d; ++i) head.wv[static_cast<size_t>(i) * d + i] = 1.0;
    return {head};
}

namespace {

std::vector<double> mat_vec(const std::vector<double>& w, int d, const std::vector<double>& v) {
    std::vector<double> out(static_cast<size_t>(d), 0.0);
    for (int r = 0; r < d; ++r) {
        double acc = 0;
        for (int c = 0; c < d; ++c) acc += w[static_cast<size_t>(r) * d + c] * v[static_cast<size_t>(c)];
        out[static_cast<size_t>(r)] = acc;
    }
    return out;
}

double dot(const std::vector<double>& x, const std::vector<double>& y) {
    double acc = 0;
    for (size_t i = 0; i < x.size(); ++i) acc += x[i] * y[i];
    return acc;
}

} // namespace

ProtocolTranscript run_protocol(const DisjointnessInstance& inst,
                                const std::vector<ProtocolHead>& heads,
                                const constructions::EmbeddingSet& embeddings, int p) {
    inst.validate();
    embeddings.validate();
    if (heads.empty()) throw std::invalid_argument("run_protocol: needs at least one head");
    if (p < 2) throw std::invalid_argument("run_protocol: p must be at least 2");
    const int d = embeddings.d;
    const int m = embeddings.m;
    for (const auto& head : heads)
        if (head.wq.size() != static_cast<size_t>(d) * d || head.wk.size() != head.wq.size() ||
            head.wv.size() != head.wq.size())
            throw std::invalid_argument("run_protocol: head matrices must be d x d");

    ProtocolTranscript tr;
    DisjointnessInstance played = inst;
    int n = static_cast<int>(inst.a.size());
    if (m < 3 * n + 1) {
        const int shrunk = m / 6;
        if (shrunk < 1)
            throw std::invalid_argument("run_protocol: vocabulary too small for even one bit");
        played.a.resize(static_cast<size_t>(shrunk));
        played.b.resize(static_cast<size_t>(shrunk));
        tr.warning = "vocabulary supports only " + std::to_string(shrunk) +
                     " of " + std::to_string(n) + " bits; instance shrunk";
        n = shrunk;
    }
    tr.n_bits = n;

    const EncodedInputs enc = encode_inputs(played, m);
    const int h = static_cast<int>(heads.size());

    // Per head: key/value images of every token and the query logit. The
    // query itself attends but is not attended, matching the denominator
    // sum over the 2n input positions.
    std::vector<std::vector<double>> logits(static_cast<size_t>(h)); // per head, per token
    std::vector<std::vector<std::vector<double>>> values(static_cast<size_t>(h));
    double max_abs_logit = 0;
    for (int j = 0; j < h; ++j) {
        const auto qx = mat_vec(heads[static_cast<size_t>(j)].wq, d,
                                embeddings.vectors[static_cast<size_t>(enc.query)]);
        logits[static_cast<size_t>(j)].resize(static_cast<size_t>(m));
        values[static_cast<size_t>(j)].resize(static_cast<size_t>(m));
        for (int t = 0; t < m; ++t) {
            const auto& v = embeddings.vectors[static_cast<size_t>(t)];
            logits[static_cast<size_t>(j)][static_cast<size_t>(t)] =
                dot(mat_vec(heads[static_cast<size_t>(j)].wk, d, v), qx);
            values[static_cast<size_t>(j)][static_cast<size_t>(t)] =
                mat_vec(heads[static_cast<size_t>(j)].wv, d, v);
        }
        for (double l : logits[static_cast<size_t>(j)])
            max_abs_logit = std::max(max_abs_logit, std::abs(l));
    }
    const double denom_range = 2.0 * n * std::exp(max_abs_logit);
    if (!std::isfinite(denom_range))
        throw std::invalid_argument("run_protocol: head logits overflow the denominator range");
    const double coord_range = static_cast<double>(n);

    auto send = [&](char sender, std::vector<double> raw, double range) {
        ProtocolMessage msg;
        msg.sender = sender;
        msg.bits = p * static_cast<int>(raw.size());
        msg.values.reserve(raw.size());
        for (double x : raw) msg.values.push_back(quantize(x, p, range, tr.saturated));
        tr.total_bits += msg.bits;
        tr.messages.push_back(std::move(msg));
        return tr.messages.back().values;
    };

    // 1. Alice: partial softmax denominators.
    std::vector<double> s_partial(static_cast<size_t>(h), 0.0);
    for (int j = 0; j < h; ++j)
        for (int tok : enc.alice)
            s_partial[static_cast<size_t>(j)] +=
                std::exp(logits[static_cast<size_t>(j)][static_cast<size_t>(tok)]);
    const auto s_partial_q = send('A', s_partial, denom_range);

    // 2. Bob: completed denominators.
    std::vector<double> s_full = s_partial_q;
    for (int j = 0; j < h; ++j)
        for (int tok : enc.bob)
            s_full[static_cast<size_t>(j)] +=
                std::exp(logits[static_cast<size_t>(j)][static_cast<size_t>(tok)]);
    const auto s_full_q = send('B', s_full, denom_range);

    // 3. Alice: partial attention outputs, normalized by the agreed
    // denominators, flattened head-major.
    std::vector<double> t_partial(static_cast<size_t>(h) * d, 0.0);
    for (int j = 0; j < h; ++j) {
        // a denominator crushed to zero by coarse quantization yields an
        // all-zero head instead of infinities
        const double inv = s_full_q[static_cast<size_t>(j)] > 0
                               ? 1.0 / s_full_q[static_cast<size_t>(j)]
                               : 0.0;
        for (int tok : enc.alice) {
            const double w = std::exp(logits[static_cast<size_t>(j)][static_cast<size_t>(tok)]) * inv;
            const auto& val = values[static_cast<size_t>(j)][static_cast<size_t>(tok)];
            for (int c = 0; c < d; ++c)
                t_partial[static_cast<size_t>(j) * d + c] += w * val[static_cast<size_t>(c)];
        }
    }
    const auto t_partial_q = send('A', t_partial, coord_range);

    // 4+5. Bob completes the attention outputs, decodes the count of the
    // busiest token from head 0 and thresholds at 1.5.
    std::vector<double> t_full = t_partial_q;
    for (int j = 0; j < h; ++j) {
        const double inv = s_full_q[static_cast<size_t>(j)] > 0
                               ? 1.0 / s_full_q[static_cast<size_t>(j)]
                               : 0.0;
        for (int tok : enc.bob) {
            const double w = std::exp(logits[static_cast<size_t>(j)][static_cast<size_t>(tok)]) * inv;
            const auto& val = values[static_cast<size_t>(j)][static_cast<size_t>(tok)];
            for (int c = 0; c < d; ++c)
                t_full[static_cast<size_t>(j) * d + c] += w * val[static_cast<size_t>(c)];
        }
    }
    double peak = 0;
    for (int c = 0; c < d; ++c) peak = std::max(peak, t_full[static_cast<size_t>(c)]);
    tr.decoded_mfe = peak * s_full_q[0];
    tr.output = tr.decoded_mfe >= 1.5 ? 1 : 0;
    ProtocolMessage verdict;
    verdict.sender = 'B';
    verdict.bits = 1;
    verdict.values = {static_cast<double>(tr.output)};
    tr.total_bits += 1;
    tr.messages.push_back(std::move(verdict));
    return tr;
}

} // namespace protocol
