#pragma once

#include <cstdint>
#include <vector>

#include "nn/model.hpp"

namespace nn {

// Offset table into the flat parameter vector. Layout order: token embeddings,
// positional embeddings (iff used), then per layer [ln1 gain, ln1 bias, wq,
// wk, wv, ln2 gain, ln2 bias, w1, b1, w2, b2] (ln slots present iff the config
// uses layer norm), then final ln gain/bias and the readout. Per-layer wq, wk,
// wv are the head matrices stacked into one DxD block: head h owns rows
// [h*head_dim, (h+1)*head_dim).
struct EngineShape {
    TransformerConfig cfg;
    int hidden = 0;

    struct LayerOffsets {
        size_t ln1g = 0, ln1b = 0;
        size_t wq = 0, wk = 0, wv = 0;
        size_t ln2g = 0, ln2b = 0;
        size_t w1 = 0, b1 = 0, w2 = 0, b2 = 0;
    };

    size_t tok = 0;
    size_t pos = 0;
    std::vector<LayerOffsets> layer;
    size_t lnfg = 0, lnfb = 0;
    size_t readout = 0;
    size_t total = 0;

    EngineShape() = default;
    EngineShape(const TransformerConfig& c, int mlp_hidden);
};

// Reusable per-example scratch. Holds every stash backward needs; attention
// probabilities dominate (heads * len^2 for all but the last layer, which only
// ever evaluates its query at the last position).
template <typename T>
struct EngineWork {
    int len = 0;
    int dim = 0, hid = 0, nheads = 0, nlayers = -1;
    std::vector<uint8_t> mask; // bidirectional flags; zero attn tails on change

    struct LayerBuf {
        std::vector<T> xhat1, base1;     // len x D (xhat only with layer norm)
        std::vector<T> q, k, v;          // len x D
        std::vector<T> kt, vt;           // packed d x len per head
        std::vector<T> mid;              // len x D, stream after attention
        std::vector<T> xhat2, base2;     // len x D
        std::vector<T> hpost;            // len x H
        std::vector<T> attn;             // heads * len^2, or heads * len at the last layer
        std::vector<T> mean1, rstd1, mean2, rstd2; // len
    };

    std::vector<std::vector<T>> x; // n_layers + 1 streams, len x D
    std::vector<LayerBuf> lb;
    std::vector<T> fxhat, fnormed; // final layer norm stash, D
    T fmean = 0, frstd = 0;

    std::vector<int> lim_causal, lim_all;

    // backward scratch
    std::vector<T> dstream, dbase, dq, dk, dv; // len x D
    std::vector<T> dh;                         // len x H
    std::vector<T> dattn;                      // len, last-layer score row
    std::vector<T> drow;                       // len, fused backward score row
    std::vector<T> dkt, dvt;                   // D x len transposed accumulators
    std::vector<T> wt;                         // packed weight transpose
    std::vector<T> dw1t;                       // D x H transposed w1 gradient

    void ensure(const EngineShape& shape, int length);
};

// Training and evaluation engine over a flat parameter vector. Forward
// evaluates the readout at the last position only; the final layer's query,
// attention mix and MLP run at that position alone, which leaves the scalar
// output and all parameter gradients exact because later positions of the
// last layer never reach the readout.
template <typename T>
class Engine {
  public:
    Engine(const TransformerConfig& cfg, int mlp_hidden);
    explicit Engine(const TransformerModel& m);

    const EngineShape& shape() const { return shape_; }
    std::vector<T>& params() { return theta_; }
    const std::vector<T>& params() const { return theta_; }

    // every parameter drawn N(0, 1/sqrt(model_dim))
    void init_random(uint64_t seed);

    TransformerModel to_model() const;

    double forward(const int* tokens, int len, EngineWork<T>& work) const;

    // dy is d(loss)/d(output); accumulates into grads (size shape().total),
    // consuming the stashes of the matching forward call
    void backward(const int* tokens, int len, T dy, EngineWork<T>& work, T* grads) const;

  private:
    EngineShape shape_;
    std::vector<T> theta_;
};

extern template class Engine<float>;
extern template class Engine<double>;
extern template struct EngineWork<float>;
extern template struct EngineWork<double>;

} // namespace nn
