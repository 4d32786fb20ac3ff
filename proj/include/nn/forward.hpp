#pragma once

#include <vector>

#include "nn/model.hpp"

namespace nn {

// Numerically stable softmax (max subtraction). Throws on empty or non-finite
// input. Output sums to 1 up to rounding.
std::vector<double> softmax(const std::vector<double>& logits);

// One attention head evaluated at `pos` over the given per-position streams.
// xs: len x dim_in row-major. Returns the full V-mapped combination
//   out = sum_j a_j * (wv x_j)   with a = softmax over allowed positions,
// plus the weights themselves (zeros at masked positions). Allowed positions
// are 0..pos for causal, all for bidirectional.
struct HeadResult {
    std::vector<double> out;     // dim_out of wv
    std::vector<double> weights; // len, masked entries zero
};
HeadResult attention_head_forward(const std::vector<double>& wq,
                                  const std::vector<double>& wk,
                                  const std::vector<double>& wv,
                                  int dim_q, // rows of wq/wk
                                  int dim_in,
                                  int dim_v, // rows of wv
                                  const std::vector<double>& xs,
                                  int len, int pos, bool bidirectional);

// w2 * relu(w1 x + b1) + b2
std::vector<double> mlp_forward(const Mlp& mlp, int dim_in, const std::vector<double>& x);

// Readout at the last position.
double model_forward(const TransformerModel& model, const std::vector<int>& tokens);

// Full residual stream after every layer, len x D row-major; the readout is
// dot(readout, ln_f(stream at last position)). Exposed for construction
// debugging and position-level tests.
std::vector<double> model_forward_all(const TransformerModel& model,
                                      const std::vector<int>& tokens);

} // namespace nn
