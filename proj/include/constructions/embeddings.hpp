#pragma once

#include <vector>

#include "nn/model.hpp"

namespace constructions {

enum class EmbeddingKind { one_hot, orthonormal, rademacher };

struct EmbeddingSet {
    EmbeddingKind kind = EmbeddingKind::one_hot;
    int m = 0;
    int d = 0;
    std::vector<std::vector<double>> vectors;

    void validate() const;
};

EmbeddingSet one_hot_embeddings(int m, int d);

struct ConstructionReport {
    nn::TransformerModel model;
    int certified_n = 0;
    int mlp_width = 0;
    double temperature = 0; // 0 when unused
    double max_cross_inner = 0;
};

} // namespace constructions
