#pragma once

#include <vector>

#include "constructions/embeddings.hpp"
#include "nn/model.hpp"

namespace constructions {

// Tournament of pairwise maxima, max(a,b) = a + relu(b-a), as residual
// stages: stage r adds relu(right - left) into the left slot for pairs
// stride 2^(r-1) apart, so coordinate 0 holds the maximum after
// ceil(log2 m) stages. Exact for any reals.
struct MaxNet {
    int input_dim = 0;
    std::vector<nn::Mlp> stages; // applied as x += mlp(x)
};

MaxNet build_max_mlp(int m);

double max_net_eval(const MaxNet& net, std::vector<double> x);

// D = 2m: uniform attention (Q = 0) writes the normalized histogram into
// coordinates 0..m-1 while the residual one-hot parks in m..2m-1, never read
// back; the max tournament then runs across the layers' MLPs and the readout
// rescales coordinate 0 by n. Exact on every length-n sequence.
ConstructionReport build_mfe_histogram(int m, int n);

// Two layers, no MLP needed after the second. Layer 1 is bidirectional:
// uniform attention lands the histogram next to the one-hot and the MLP
// turns count(x_i)/n into 1/count(x_i) at every position (piecewise-linear
// interpolation through the n grid points, gated per token). Layer 2 attends
// from the last position with logits -T/count_j, concentrating weight on
// maximum-count positions, and its V moves ~1/max_count into the output
// coordinate. Requires one-hot embeddings with d = m.
ConstructionReport build_mfe_two_layer(int m, int d, int n, const EmbeddingSet& embeddings);

// Snap a raw model output to the nearest 1/k, k in 1..n.
int decode_mfe_two_layer(double output, int n);

} // namespace constructions
