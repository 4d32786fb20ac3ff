#include "constructions/embeddings.hpp"

#include <cmath>
#include <stdexcept>

namespace constructions {

void EmbeddingSet::validate() const {
    if (m < 1 || d < 1) throw std::invalid_argument("EmbeddingSet: m and d must be positive");
    if (vectors.size() != static_cast<size_t>(m))
        throw std::invalid_argument("EmbeddingSet: vector count mismatch");
    if (kind == EmbeddingKind::one_hot && d < m)
        throw std::invalid_argument("EmbeddingSet: one_hot requires d >= m");
    for (const auto& v : vectors) {
        if (v.size() != static_cast<size_t>(d))
            throw std::invalid_argument("EmbeddingSet: dimension mismatch");
        double norm2 = 0;
        for (double x : v) {
            if (!std::isfinite(x)) throw std::invalid_argument("EmbeddingSet: non-finite entry");
            norm2 += x * x;
        }
        if (std::abs(norm2 - 1.0) > 2e-9)
            throw std::invalid_argument("EmbeddingSet: vectors must have unit norm");
    }
}

EmbeddingSet one_hot_embeddings(int m, int d) {
    if (d < m) throw std::invalid_argument("one_hot_embeddings: requires d >= m");
    EmbeddingSet set;
    set.kind = EmbeddingKind::one_hot;
    set.m = m;
    set.d = d;
    set.vectors.assign(static_cast<size_t>(m), std::vector<double>(static_cast<size_t>(d), 0.0));
    for (int t = 0; t < m; ++t) set.vectors[static_cast<size_t>(t)][static_cast<size_t>(t)] = 1.0;
    return set;
}

} // namespace constructions
