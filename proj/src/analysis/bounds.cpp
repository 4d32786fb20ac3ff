#include <cmath>
#include <stdexcept>

#include "analysis/bounds.hpp"
#include "util/rng.hpp"

namespace analysis {

double welch_lower_bound(int m, int d) {
    if (d < 1) throw std::invalid_argument("welch_lower_bound: d must be positive");
    if (m <= d) throw std::invalid_argument("welch_lower_bound: requires m > d");
    return std::sqrt(static_cast<double>(m - d) / (static_cast<double>(d) * (m - 1)));
}

MaxInnerPair max_pairwise_inner(const constructions::EmbeddingSet& embeddings) {
    embeddings.validate();
    if (embeddings.m < 2) throw std::invalid_argument("max_pairwise_inner: requires m >= 2");
    MaxInnerPair best;
    best.value = -1;
    for (int i = 0; i < embeddings.m; ++i) {
        const auto& vi = embeddings.vectors[static_cast<size_t>(i)];
        for (int j = i + 1; j < embeddings.m; ++j) {
            const auto& vj = embeddings.vectors[static_cast<size_t>(j)];
            double inner = 0;
            for (int c = 0; c < embeddings.d; ++c)
                inner += vi[static_cast<size_t>(c)] * vj[static_cast<size_t>(c)];
            if (std::abs(inner) > best.value) {
                best.value = std::abs(inner);
                best.i = i;
                best.j = j;
            }
        }
    }
    return best;
}

constructions::EmbeddingSet random_rademacher_embeddings(int m, int d, uint64_t seed) {
    if (m < 1 || d < 1)
        throw std::invalid_argument("random_rademacher_embeddings: m and d must be positive");
    util::Rng rng(seed);
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));
    constructions::EmbeddingSet set;
    set.kind = constructions::EmbeddingKind::rademacher;
    set.m = m;
    set.d = d;
    set.vectors.assign(static_cast<size_t>(m), std::vector<double>(static_cast<size_t>(d)));
    for (auto& v : set.vectors)
        for (auto& x : v) x = rng.next_sign() * scale;
    return set;
}

double hoeffding_bound(int d, double t) {
    if (d < 1) throw std::invalid_argument("hoeffding_bound: d must be positive");
    if (t < 0) throw std::invalid_argument("hoeffding_bound: t must be nonnegative");
    return 2.0 * std::exp(-0.5 * d * t * t);
}

double required_temperature(int n, double J) {
    if (n < 1) throw std::invalid_argument("required_temperature: n must be positive");
    if (J < 0 || J >= 1)
        throw std::invalid_argument("required_temperature: J must lie in [0, 1)");
    return std::ceil(std::log(2.0 * n) / (1.0 - J));
}

} // namespace analysis
