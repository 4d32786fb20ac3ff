#pragma once

#include <cstdint>

#include "constructions/embeddings.hpp"

namespace analysis {

// sqrt((m-d)/(d(m-1))): no m unit vectors in R^d have all pairwise inner
// products below this. Rejects m <= d, where an orthonormal set exists.
double welch_lower_bound(int m, int d);

struct MaxInnerPair {
    double value = 0; // max_{i!=j} |v_i . v_j|
    int i = 0;
    int j = 0;
};

// Exhaustive O(m^2) search. Rejects m < 2.
MaxInnerPair max_pairwise_inner(const constructions::EmbeddingSet& embeddings);

// Every coordinate +-1/sqrt(d); unit norm exact. Deterministic given seed.
constructions::EmbeddingSet random_rademacher_embeddings(int m, int d, uint64_t seed);

// 2*exp(-d*t^2/2), the tail bound for one rademacher pair inner product.
// Rejects t < 0.
double hoeffding_bound(int d, double t);

// ceil(log(2n)/(1-J)): with this temperature each unmatched position carries
// softmax weight below 1/(2n), so the total stray mass stays under 1/2.
// Rejects J outside [0,1) and n < 1.
double required_temperature(int n, double J);

} // namespace analysis
