#pragma once

#include <utility>
#include <vector>

#include "constructions/embeddings.hpp"
#include "nn/model.hpp"

namespace constructions {

// One layer, one head, D = 2m. Attention (Q = 0, causal) averages the token
// one-hots into coordinates 0..m-1; the residual keeps e_{x_n} in m..2m-1.
// Gate i = relu(n*hist_i - B*(1 - onehot_i)) extracts the query bin. Exact on
// every length-n sequence; certified only at that n (a length-2n duplicate
// still yields the length-n answer). Rejects B <= n.
ConstructionReport build_qc_histogram(int m, int n, double B);
ConstructionReport build_qc_histogram(int m, int n); // B = 2n^2

// One layer, one head, D = d + 2. Sharp attention with K^T Q = T*I on the
// token block puts weight ~1/count on matching positions; V moves the
// positional flag of position n into a scratch coordinate, so scratch = w_n.
// The inverter MLP (4n hidden units) maps it back to the count. Rejects
// embeddings whose max cross inner product J >= 1 - 1e-6, and n < 1.
ConstructionReport build_qc_countattend(int m, int d, int n, const EmbeddingSet& embeddings);

// 4n hidden units: for every k in 1..n a four-relu bump with plateau exactly
// k on [1/(k+1/2), 1/(k-1/2) - eps]. Bumps are disjoint; the output is
// piecewise linear and zero left of the last bump's support. Rejects eps
// outside (0, 1/(2n(n+1))].
nn::Mlp build_inverter_mlp(int n, double eps);
nn::Mlp build_inverter_mlp(int n); // eps = 1/(4n(n+1))

double default_inverter_eps(int n);

// v_{x_n} . sum_j count_j v_j with unnormalized counts: what the histogram
// head's readout sees when embeddings are not orthonormal.
double hist_eval(const EmbeddingSet& embeddings, const std::vector<int>& seq);

// Sequence of n/2 copies of i then n/2 copies of j where (i,j) is the pair
// maximizing |v_i . v_j| = A, plus the guaranteed error lower bound (n/2)*A.
// Rejects m < 2d (Welch floor too weak) and odd n.
struct AdversarialInput {
    std::vector<int> seq;
    double error_lower_bound = 0;
};
AdversarialInput adversarial_welch_input(const EmbeddingSet& embeddings, int n);

} // namespace constructions
