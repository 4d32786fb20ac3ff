#include "nn/engine.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

#include "nn/kernels.hpp"
#include "util/rng.hpp"

namespace nn {

EngineShape::EngineShape(const TransformerConfig& c, int mlp_hidden) : cfg(c), hidden(mlp_hidden) {
    cfg.validate();
    if (mlp_hidden < 0) throw std::invalid_argument("EngineShape: mlp_hidden must be >= 0");
    if (cfg.n_layers > 0 && mlp_hidden == 0)
        throw std::invalid_argument("EngineShape: mlp_hidden must be positive with layers");
    const size_t D = static_cast<size_t>(cfg.model_dim);
    const size_t H = static_cast<size_t>(hidden);
    size_t off = 0;
    auto take = [&off](size_t count) {
        const size_t at = off;
        off += count;
        return at;
    };
    tok = take(static_cast<size_t>(cfg.vocab_size) * D);
    pos = cfg.use_positional ? take(static_cast<size_t>(cfg.context_len) * D) : 0;
    layer.resize(static_cast<size_t>(cfg.n_layers));
    for (auto& lo : layer) {
        if (cfg.use_layer_norm) {
            lo.ln1g = take(D);
            lo.ln1b = take(D);
        }
        lo.wq = take(D * D);
        lo.wk = take(D * D);
        lo.wv = take(D * D);
        if (cfg.use_layer_norm) {
            lo.ln2g = take(D);
            lo.ln2b = take(D);
        }
        lo.w1 = take(H * D);
        lo.b1 = take(H);
        lo.w2 = take(D * H);
        lo.b2 = take(D);
    }
    if (cfg.use_layer_norm) {
        lnfg = take(D);
        lnfb = take(D);
    }
    readout = take(D);
    total = off;
}

template <typename T>
void EngineWork<T>::ensure(const EngineShape& shape, int length) {
    const auto& cfg = shape.cfg;
    const size_t D = static_cast<size_t>(cfg.model_dim);
    const size_t H = static_cast<size_t>(shape.hidden);
    const size_t n = static_cast<size_t>(length);
    const size_t L = static_cast<size_t>(cfg.n_layers);
    std::vector<uint8_t> flags(L, 0);
    for (size_t l = 0; l < L; ++l) flags[l] = cfg.layer_bidirectional(static_cast<int>(l)) ? 1 : 0;
    if (length == len && cfg.model_dim == dim && shape.hidden == hid && cfg.n_heads == nheads &&
        cfg.n_layers == nlayers && flags == mask)
        return;
    len = length;
    dim = cfg.model_dim;
    hid = shape.hidden;
    nheads = cfg.n_heads;
    nlayers = cfg.n_layers;
    mask = std::move(flags);

    x.assign(L + 1, {});
    for (auto& s : x) s.assign(n * D, 0);
    lb.assign(L, {});
    for (size_t l = 0; l < L; ++l) {
        auto& b = lb[l];
        const bool last = (l + 1 == L);
        if (cfg.use_layer_norm) b.xhat1.assign(n * D, 0);
        b.base1.assign(n * D, 0);
        b.q.assign(n * D, 0);
        b.k.assign(n * D, 0);
        b.v.assign(n * D, 0);
        if (!last) {
            b.kt.assign(n * D, 0);
            b.vt.assign(n * D, 0);
        }
        b.mid.assign(n * D, 0);
        if (cfg.use_layer_norm) b.xhat2.assign(n * D, 0);
        b.base2.assign(n * D, 0);
        b.hpost.assign(n * H, 0);
        // last layer attends from the final position only; tails of causal
        // rows stay zero for the life of the buffer, backward relies on that
        b.attn.assign(static_cast<size_t>(cfg.n_heads) * n * (last ? 1 : n), 0);
        b.mean1.assign(n, 0);
        b.rstd1.assign(n, 0);
        b.mean2.assign(n, 0);
        b.rstd2.assign(n, 0);
    }
    fxhat.assign(D, 0);
    fnormed.assign(D, 0);

    lim_causal.resize(n);
    lim_all.resize(n);
    for (int i = 0; i < length; ++i) {
        lim_causal[static_cast<size_t>(i)] = i + 1;
        lim_all[static_cast<size_t>(i)] = length;
    }

    dstream.assign(n * D, 0);
    dbase.assign(n * D, 0);
    dq.assign(n * D, 0);
    dk.assign(n * D, 0);
    dv.assign(n * D, 0);
    dh.assign(n * H, 0);
    dattn.assign(n, 0);
    drow.assign(n, 0);
    dkt.assign(n * D, 0);
    dvt.assign(n * D, 0);
    const size_t wtmax = D * (H > D ? H : D);
    wt.assign(wtmax, 0);
    dw1t.assign(D * H, 0);
}

namespace {

template <typename T>
inline void axpy(T* y, T a, const T* x, int n) {
#pragma omp simd
    for (int j = 0; j < n; ++j) y[j] += a * x[j];
}

template <typename T>
inline T dot(const T* a, const T* b, int n) {
    T s = 0;
#pragma omp simd reduction(+ : s)
    for (int j = 0; j < n; ++j) s += a[j] * b[j];
    return s;
}

// dst[c][o] = src[o][c]; src is rows x cols row-major
template <typename T1, typename T2>
inline void pack_t(const T1* src, int rows, int cols, T2* dst) {
    for (int o = 0; o < rows; ++o)
        for (int c = 0; c < cols; ++c)
            dst[static_cast<size_t>(c) * rows + o] =
                static_cast<T2>(src[static_cast<size_t>(o) * cols + c]);
}

template <typename T>
void ln_forward_rows(const T* in, int row0, int rows, int D, const T* gain, const T* bias,
                     T* xhat, T* out, T* mean, T* rstd) {
    for (int r = row0; r < row0 + rows; ++r) {
        const T* row = in + static_cast<size_t>(r) * D;
        T m = 0;
        for (int c = 0; c < D; ++c) m += row[c];
        m /= static_cast<T>(D);
        T var = 0;
        for (int c = 0; c < D; ++c) {
            const T t = row[c] - m;
            var += t * t;
        }
        var /= static_cast<T>(D);
        const T rs = static_cast<T>(1) / std::sqrt(var + static_cast<T>(kLayerNormEps));
        mean[r] = m;
        rstd[r] = rs;
        T* xh = xhat + static_cast<size_t>(r) * D;
        T* o = out + static_cast<size_t>(r) * D;
        for (int c = 0; c < D; ++c) {
            xh[c] = (row[c] - m) * rs;
            o[c] = gain[c] * xh[c] + bias[c];
        }
    }
}

// dstream rows gain the input-gradient of the norm; gain/bias grads accumulate
template <typename T>
void ln_backward_rows(const T* dout, int row0, int rows, int D, const T* gain, const T* xhat,
                      const T* rstd, T* ggain, T* gbias, T* dstream) {
    for (int r = row0; r < row0 + rows; ++r) {
        const T* dr = dout + static_cast<size_t>(r) * D;
        const T* xh = xhat + static_cast<size_t>(r) * D;
        T m1 = 0, m2 = 0;
        for (int c = 0; c < D; ++c) {
            ggain[c] += dr[c] * xh[c];
            gbias[c] += dr[c];
            const T dxh = dr[c] * gain[c];
            m1 += dxh;
            m2 += dxh * xh[c];
        }
        m1 /= static_cast<T>(D);
        m2 /= static_cast<T>(D);
        const T rs = rstd[r];
        T* ds = dstream + static_cast<size_t>(r) * D;
        for (int c = 0; c < D; ++c) {
            const T dxh = dr[c] * gain[c];
            ds[c] += rs * (dxh - m1 - xh[c] * m2);
        }
    }
}

template <typename T>
inline void softmax_row(T* row, int jl) {
    T mx = row[0];
#pragma omp simd reduction(max : mx)
    for (int j = 1; j < jl; ++j) mx = row[j] > mx ? row[j] : mx;
    const T inv = static_cast<T>(1) / kern::vexp_shift_sum(row, jl, mx);
#pragma omp simd
    for (int j = 0; j < jl; ++j) row[j] *= inv;
}

} // namespace

template <typename T>
Engine<T>::Engine(const TransformerConfig& cfg, int mlp_hidden) : shape_(cfg, mlp_hidden) {
    theta_.assign(shape_.total, 0);
}

template <typename T>
Engine<T>::Engine(const TransformerModel& m) {
    m.validate();
    int hidden = 0;
    for (const auto& layer : m.layers) {
        if (hidden == 0) hidden = layer.mlp.hidden_dim;
        if (layer.mlp.hidden_dim != hidden)
            throw std::invalid_argument("Engine: requires a uniform mlp width across layers");
    }
    shape_ = EngineShape(m.config, hidden);
    theta_.assign(shape_.total, 0);
    const auto& cfg = m.config;
    const size_t D = static_cast<size_t>(cfg.model_dim);
    const size_t d = static_cast<size_t>(cfg.head_dim);
    const size_t H = static_cast<size_t>(hidden);
    auto put = [this](size_t off, const std::vector<double>& src, size_t count, size_t src_off = 0) {
        for (size_t i = 0; i < count; ++i) theta_[off + i] = static_cast<T>(src[src_off + i]);
    };
    put(shape_.tok, m.token_embeddings, static_cast<size_t>(cfg.vocab_size) * D);
    if (cfg.use_positional)
        put(shape_.pos, m.positional_embeddings, static_cast<size_t>(cfg.context_len) * D);
    for (int l = 0; l < cfg.n_layers; ++l) {
        const auto& lo = shape_.layer[static_cast<size_t>(l)];
        const auto& src = m.layers[static_cast<size_t>(l)];
        if (cfg.use_layer_norm) {
            put(lo.ln1g, src.ln1_gain, D);
            put(lo.ln1b, src.ln1_bias, D);
            put(lo.ln2g, src.ln2_gain, D);
            put(lo.ln2b, src.ln2_bias, D);
        }
        for (int h = 0; h < cfg.n_heads; ++h) {
            const auto& head = src.heads[static_cast<size_t>(h)];
            put(lo.wq + static_cast<size_t>(h) * d * D, head.wq, d * D);
            put(lo.wk + static_cast<size_t>(h) * d * D, head.wk, d * D);
            // only the head's own output rows of wv reach the stream
            put(lo.wv + static_cast<size_t>(h) * d * D, head.wv, d * D,
                static_cast<size_t>(h) * d * D);
        }
        put(lo.w1, src.mlp.w1, H * D);
        put(lo.b1, src.mlp.b1, H);
        put(lo.w2, src.mlp.w2, D * H);
        put(lo.b2, src.mlp.b2, D);
    }
    if (cfg.use_layer_norm) {
        put(shape_.lnfg, m.final_ln_gain, D);
        put(shape_.lnfb, m.final_ln_bias, D);
    }
    put(shape_.readout, m.readout, D);
}

template <typename T>
TransformerModel Engine<T>::to_model() const {
    const auto& cfg = shape_.cfg;
    TransformerModel m = zero_model(cfg, shape_.hidden);
    const size_t D = static_cast<size_t>(cfg.model_dim);
    const size_t d = static_cast<size_t>(cfg.head_dim);
    const size_t H = static_cast<size_t>(shape_.hidden);
    auto get = [this](std::vector<double>& dst, size_t off, size_t count, size_t dst_off = 0) {
        for (size_t i = 0; i < count; ++i) dst[dst_off + i] = static_cast<double>(theta_[off + i]);
    };
    get(m.token_embeddings, shape_.tok, static_cast<size_t>(cfg.vocab_size) * D);
    if (cfg.use_positional)
        get(m.positional_embeddings, shape_.pos, static_cast<size_t>(cfg.context_len) * D);
    for (int l = 0; l < cfg.n_layers; ++l) {
        const auto& lo = shape_.layer[static_cast<size_t>(l)];
        auto& dst = m.layers[static_cast<size_t>(l)];
        if (cfg.use_layer_norm) {
            get(dst.ln1_gain, lo.ln1g, D);
            get(dst.ln1_bias, lo.ln1b, D);
            get(dst.ln2_gain, lo.ln2g, D);
            get(dst.ln2_bias, lo.ln2b, D);
        }
        for (int h = 0; h < cfg.n_heads; ++h) {
            auto& head = dst.heads[static_cast<size_t>(h)];
            get(head.wq, lo.wq + static_cast<size_t>(h) * d * D, d * D);
            get(head.wk, lo.wk + static_cast<size_t>(h) * d * D, d * D);
            get(head.wv, lo.wv + static_cast<size_t>(h) * d * D, d * D,
                static_cast<size_t>(h) * d * D);
        }
        get(dst.mlp.w1, lo.w1, H * D);
        get(dst.mlp.b1, lo.b1, H);
        get(dst.mlp.w2, lo.w2, D * H);
        get(dst.mlp.b2, lo.b2, D);
    }
    if (cfg.use_layer_norm) {
        get(m.final_ln_gain, shape_.lnfg, D);
        get(m.final_ln_bias, shape_.lnfb, D);
    }
    get(m.readout, shape_.readout, D);
    m.validate();
    return m;
}

template <typename T>
void Engine<T>::init_random(uint64_t seed) {
    util::Rng rng(seed);
    const auto& cfg = shape_.cfg;
    const double std = 1.0 / std::sqrt(static_cast<double>(cfg.model_dim));
    const size_t D = static_cast<size_t>(cfg.model_dim);
    const size_t H = static_cast<size_t>(shape_.hidden);
    auto fill = [&](size_t off, size_t count) {
        for (size_t i = 0; i < count; ++i) theta_[off + i] = static_cast<T>(rng.next_normal() * std);
    };
    auto set = [&](size_t off, size_t count, T value) {
        for (size_t i = 0; i < count; ++i) theta_[off + i] = value;
    };
    fill(shape_.tok, static_cast<size_t>(cfg.vocab_size) * D);
    if (cfg.use_positional) fill(shape_.pos, static_cast<size_t>(cfg.context_len) * D);
    for (const auto& lo : shape_.layer) {
        if (cfg.use_layer_norm) {
            set(lo.ln1g, D, static_cast<T>(1));
            set(lo.ln1b, D, static_cast<T>(0));
            set(lo.ln2g, D, static_cast<T>(1));
            set(lo.ln2b, D, static_cast<T>(0));
        }
        fill(lo.wq, D * D);
        fill(lo.wk, D * D);
        fill(lo.wv, D * D);
        fill(lo.w1, H * D);
        set(lo.b1, H, static_cast<T>(0));
        fill(lo.w2, D * H);
        set(lo.b2, D, static_cast<T>(0));
    }
    if (cfg.use_layer_norm) {
        set(shape_.lnfg, D, static_cast<T>(1));
        set(shape_.lnfb, D, static_cast<T>(0));
    }
    fill(shape_.readout, D);
}

template <typename T>
double Engine<T>::forward(const int* tokens, int len, EngineWork<T>& work) const {
    const auto& cfg = shape_.cfg;
    if (len < 1 || len > cfg.context_len)
        throw std::invalid_argument("Engine::forward: length out of range");
    for (int i = 0; i < len; ++i)
        if (tokens[i] < 0 || tokens[i] >= cfg.vocab_size)
            throw std::invalid_argument("Engine::forward: token out of range");
    work.ensure(shape_, len);

    const int D = cfg.model_dim;
    const int d = cfg.head_dim;
    const int heads = cfg.n_heads;
    const int H = shape_.hidden;
    const int L = cfg.n_layers;
    const T* th = theta_.data();

    T* x0 = work.x[0].data();
    for (int i = 0; i < len; ++i) {
        const T* te = th + shape_.tok + static_cast<size_t>(tokens[i]) * D;
        T* row = x0 + static_cast<size_t>(i) * D;
        if (cfg.use_positional) {
            const T* pe = th + shape_.pos + static_cast<size_t>(i) * D;
            for (int c = 0; c < D; ++c) row[c] = te[c] + pe[c];
        } else {
            std::memcpy(row, te, sizeof(T) * static_cast<size_t>(D));
        }
    }

    for (int l = 0; l < L; ++l) {
        const auto& lo = shape_.layer[static_cast<size_t>(l)];
        auto& b = work.lb[static_cast<size_t>(l)];
        const bool last = (l + 1 == L);
        const int rows = last ? 1 : len;
        const int row0 = last ? len - 1 : 0;
        const size_t off = static_cast<size_t>(row0) * D;
        const int* lim =
            cfg.layer_bidirectional(l) ? work.lim_all.data() : work.lim_causal.data();
        const T* in = work.x[static_cast<size_t>(l)].data();

        if (cfg.use_layer_norm) {
            ln_forward_rows(in, 0, len, D, th + lo.ln1g, th + lo.ln1b, b.xhat1.data(),
                            b.base1.data(), b.mean1.data(), b.rstd1.data());
        } else {
            std::memcpy(b.base1.data(), in, sizeof(T) * static_cast<size_t>(len) * D);
        }

        // projections run against packed transposes to keep the axpy wide
        pack_t(th + lo.wk, D, D, work.wt.data());
        kern::gemm_nn(b.base1.data(), D, work.wt.data(), D, b.k.data(), D, len, D, D);
        pack_t(th + lo.wv, D, D, work.wt.data());
        kern::gemm_nn(b.base1.data(), D, work.wt.data(), D, b.v.data(), D, len, D, D);
        pack_t(th + lo.wq, D, D, work.wt.data());
        kern::gemm_nn(b.base1.data() + off, D, work.wt.data(), D, b.q.data() + off, D, rows, D,
                      D);

        std::memcpy(b.mid.data(), in, sizeof(T) * static_cast<size_t>(len) * D);
        if (last) {
            for (int h = 0; h < heads; ++h) {
                T* A = b.attn.data() + static_cast<size_t>(h) * len;
                const T* qh = b.q.data() + off + static_cast<size_t>(h) * d;
                kern::gemm_nt(qh, D, b.k.data() + static_cast<size_t>(h) * d, D, A, len, 1, len,
                              d, lim + row0);
                softmax_row(A, lim[row0]);
                kern::gemm_nn(A, len, b.v.data() + static_cast<size_t>(h) * d, D,
                              b.mid.data() + off + static_cast<size_t>(h) * d, D, 1, d, len,
                              lim + row0, nullptr, true);
            }
        } else {
            for (int h = 0; h < heads; ++h)
                for (int c = 0; c < d; ++c) {
                    T* krow = b.kt.data() + (static_cast<size_t>(h) * d + c) * len;
                    T* vrow = b.vt.data() + (static_cast<size_t>(h) * d + c) * len;
                    const T* ksrc = b.k.data() + static_cast<size_t>(h) * d + c;
                    const T* vsrc = b.v.data() + static_cast<size_t>(h) * d + c;
                    for (int j = 0; j < len; ++j) {
                        krow[j] = ksrc[static_cast<size_t>(j) * D];
                        vrow[j] = vsrc[static_cast<size_t>(j) * D];
                    }
                }
            // fused per-row score/softmax/mix keeps each attention row in L1
            for (int i = 0; i < len; ++i) {
                const int jl = lim[i];
                const T* qrow = b.q.data() + static_cast<size_t>(i) * D;
                T* mrow = b.mid.data() + static_cast<size_t>(i) * D;
                for (int h = 0; h < heads; ++h) {
                    T* arow = b.attn.data() +
                              (static_cast<size_t>(h) * len + static_cast<size_t>(i)) * len;
                    const T* kth = b.kt.data() + static_cast<size_t>(h) * d * len;
                    const T* vth = b.vt.data() + static_cast<size_t>(h) * d * len;
                    const T q0 = qrow[static_cast<size_t>(h) * d];
#pragma omp simd
                    for (int j = 0; j < jl; ++j) arow[j] = q0 * kth[j];
                    for (int c = 1; c < d; ++c)
                        axpy(arow, qrow[static_cast<size_t>(h) * d + c],
                             kth + static_cast<size_t>(c) * len, jl);
                    softmax_row(arow, jl);
                    for (int c = 0; c < d; ++c)
                        mrow[static_cast<size_t>(h) * d + c] +=
                            dot(arow, vth + static_cast<size_t>(c) * len, jl);
                }
            }
        }

        if (cfg.use_layer_norm) {
            ln_forward_rows(b.mid.data(), row0, rows, D, th + lo.ln2g, th + lo.ln2b,
                            b.xhat2.data(), b.base2.data(), b.mean2.data(), b.rstd2.data());
        } else {
            std::memcpy(b.base2.data() + off, b.mid.data() + off,
                        sizeof(T) * static_cast<size_t>(rows) * D);
        }

        const size_t offh = static_cast<size_t>(row0) * H;
        pack_t(th + lo.w1, H, D, work.wt.data());
        kern::gemm_nn(b.base2.data() + off, D, work.wt.data(), H, b.hpost.data() + offh, H, rows,
                      H, D);
        for (int r = 0; r < rows; ++r) {
            T* hrow = b.hpost.data() + offh + static_cast<size_t>(r) * H;
            const T* b1 = th + lo.b1;
#pragma omp simd
            for (int u = 0; u < H; ++u) {
                const T pre = hrow[u] + b1[u];
                hrow[u] = pre > 0 ? pre : 0;
            }
        }
        T* out = work.x[static_cast<size_t>(l) + 1].data();
        std::memcpy(out, b.mid.data(), sizeof(T) * static_cast<size_t>(len) * D);
        pack_t(th + lo.w2, D, H, work.wt.data());
        kern::gemm_nn(b.hpost.data() + offh, H, work.wt.data(), D, out + off, D, rows, D, H,
                      nullptr, nullptr, true);
        for (int r = row0; r < row0 + rows; ++r) {
            T* orow = out + static_cast<size_t>(r) * D;
            const T* b2 = th + lo.b2;
            for (int c = 0; c < D; ++c) orow[c] += b2[c];
        }
    }

    const T* xlast = work.x[static_cast<size_t>(L)].data() + static_cast<size_t>(len - 1) * D;
    T y = 0;
    if (cfg.use_layer_norm) {
        T m = 0;
        for (int c = 0; c < D; ++c) m += xlast[c];
        m /= static_cast<T>(D);
        T var = 0;
        for (int c = 0; c < D; ++c) {
            const T t = xlast[c] - m;
            var += t * t;
        }
        var /= static_cast<T>(D);
        const T rs = static_cast<T>(1) / std::sqrt(var + static_cast<T>(kLayerNormEps));
        work.fmean = m;
        work.frstd = rs;
        for (int c = 0; c < D; ++c) {
            work.fxhat[static_cast<size_t>(c)] = (xlast[c] - m) * rs;
            work.fnormed[static_cast<size_t>(c)] =
                th[shape_.lnfg + static_cast<size_t>(c)] * work.fxhat[static_cast<size_t>(c)] +
                th[shape_.lnfb + static_cast<size_t>(c)];
            y += th[shape_.readout + static_cast<size_t>(c)] * work.fnormed[static_cast<size_t>(c)];
        }
    } else {
        for (int c = 0; c < D; ++c) y += th[shape_.readout + static_cast<size_t>(c)] * xlast[c];
    }
    return static_cast<double>(y);
}

template <typename T>
void Engine<T>::backward(const int* tokens, int len, T dy, EngineWork<T>& work, T* grads) const {
    const auto& cfg = shape_.cfg;
    if (work.len != len) throw std::logic_error("Engine::backward: no matching forward stash");
    const int D = cfg.model_dim;
    const int d = cfg.head_dim;
    const int heads = cfg.n_heads;
    const int H = shape_.hidden;
    const int L = cfg.n_layers;
    const T* th = theta_.data();
    const int ilast = len - 1;

    std::memset(work.dstream.data(), 0, sizeof(T) * static_cast<size_t>(len) * D);
    T* dlast = work.dstream.data() + static_cast<size_t>(ilast) * D;
    const T* xlast = work.x[static_cast<size_t>(L)].data() + static_cast<size_t>(ilast) * D;
    if (cfg.use_layer_norm) {
        T m1 = 0, m2 = 0;
        for (int c = 0; c < D; ++c) {
            const T dn = dy * th[shape_.readout + static_cast<size_t>(c)];
            grads[shape_.readout + static_cast<size_t>(c)] +=
                dy * work.fnormed[static_cast<size_t>(c)];
            grads[shape_.lnfg + static_cast<size_t>(c)] += dn * work.fxhat[static_cast<size_t>(c)];
            grads[shape_.lnfb + static_cast<size_t>(c)] += dn;
            const T dxh = dn * th[shape_.lnfg + static_cast<size_t>(c)];
            m1 += dxh;
            m2 += dxh * work.fxhat[static_cast<size_t>(c)];
        }
        m1 /= static_cast<T>(D);
        m2 /= static_cast<T>(D);
        for (int c = 0; c < D; ++c) {
            const T dxh = dy * th[shape_.readout + static_cast<size_t>(c)] *
                          th[shape_.lnfg + static_cast<size_t>(c)];
            dlast[c] = work.frstd * (dxh - m1 - work.fxhat[static_cast<size_t>(c)] * m2);
        }
    } else {
        for (int c = 0; c < D; ++c) {
            grads[shape_.readout + static_cast<size_t>(c)] += dy * xlast[c];
            dlast[c] = dy * th[shape_.readout + static_cast<size_t>(c)];
        }
    }

    for (int l = L - 1; l >= 0; --l) {
        const auto& lo = shape_.layer[static_cast<size_t>(l)];
        auto& b = work.lb[static_cast<size_t>(l)];
        const bool last = (l + 1 == L);
        const int rows = last ? 1 : len;
        const int row0 = last ? len - 1 : 0;
        const size_t off = static_cast<size_t>(row0) * D;
        const size_t offh = static_cast<size_t>(row0) * H;
        const int* lim =
            cfg.layer_bidirectional(l) ? work.lim_all.data() : work.lim_causal.data();

        // mlp path
        T* dout = work.dstream.data() + off;
        for (int r = 0; r < rows; ++r) {
            const T* dr = dout + static_cast<size_t>(r) * D;
            for (int c = 0; c < D; ++c) grads[lo.b2 + static_cast<size_t>(c)] += dr[c];
        }
        kern::gemm_tn_acc(dout, D, b.hpost.data() + offh, H, grads + lo.w2, H, rows, D, H);
        kern::gemm_nn(dout, D, th + lo.w2, H, work.dh.data() + offh, H, rows, H, D);
        for (int r = 0; r < rows; ++r) {
            T* dhr = work.dh.data() + offh + static_cast<size_t>(r) * H;
            const T* hr = b.hpost.data() + offh + static_cast<size_t>(r) * H;
            for (int u = 0; u < H; ++u) {
                if (hr[u] <= 0) dhr[u] = 0;
                grads[lo.b1 + static_cast<size_t>(u)] += dhr[u];
            }
        }
        // w1 grads land transposed first so the axpy runs hidden-wide
        std::memset(work.dw1t.data(), 0, sizeof(T) * static_cast<size_t>(D) * H);
        kern::gemm_tn_acc_t(work.dh.data() + offh, H, b.base2.data() + off, D, work.dw1t.data(),
                            H, rows, H, D);
        for (int c = 0; c < D; ++c) {
            const T* src = work.dw1t.data() + static_cast<size_t>(c) * H;
            T* dst = grads + lo.w1 + static_cast<size_t>(c);
            for (int u = 0; u < H; ++u) dst[static_cast<size_t>(u) * D] += src[u];
        }
        kern::gemm_nn(work.dh.data() + offh, H, th + lo.w1, D, work.dbase.data() + off, D, rows,
                      D, H);
        if (cfg.use_layer_norm) {
            ln_backward_rows(work.dbase.data(), row0, rows, D, th + lo.ln2g, b.xhat2.data(),
                             b.rstd2.data(), grads + lo.ln2g, grads + lo.ln2b,
                             work.dstream.data());
        } else {
            for (size_t i = off; i < off + static_cast<size_t>(rows) * D; ++i)
                work.dstream[i] += work.dbase[i];
        }

        // attention path; dstream now holds the gradient at the mid stream
        std::memset(work.dq.data(), 0, sizeof(T) * static_cast<size_t>(len) * D);
        std::memset(work.dk.data(), 0, sizeof(T) * static_cast<size_t>(len) * D);
        std::memset(work.dv.data(), 0, sizeof(T) * static_cast<size_t>(len) * D);
        if (last) {
            for (int h = 0; h < heads; ++h) {
                const T* A = b.attn.data() + static_cast<size_t>(h) * len;
                const T* dmid_h = work.dstream.data() + off + static_cast<size_t>(h) * d;
                T* dA = work.dattn.data();
                kern::gemm_nt(dmid_h, D, b.v.data() + static_cast<size_t>(h) * d, D, dA, len, 1,
                              len, d, lim + row0);
                kern::gemm_tn_acc(A, len, dmid_h, D, work.dv.data() + static_cast<size_t>(h) * d,
                                  D, 1, len, d);
                const int jl = lim[row0];
                T t = 0;
                for (int j = 0; j < jl; ++j) t += A[j] * dA[j];
                for (int j = 0; j < jl; ++j) dA[j] = A[j] * (dA[j] - t);
                kern::gemm_nn(dA, len, b.k.data() + static_cast<size_t>(h) * d, D,
                              work.dq.data() + off + static_cast<size_t>(h) * d, D, 1, d, len,
                              lim + row0, nullptr);
                kern::gemm_tn_acc(dA, len, b.q.data() + off + static_cast<size_t>(h) * d, D,
                                  work.dk.data() + static_cast<size_t>(h) * d, D, 1, len, d);
            }
        } else {
            std::memset(work.dkt.data(), 0, sizeof(T) * static_cast<size_t>(len) * D);
            std::memset(work.dvt.data(), 0, sizeof(T) * static_cast<size_t>(len) * D);
            for (int i = 0; i < len; ++i) {
                const int jl = lim[i];
                const T* dmrow = work.dstream.data() + static_cast<size_t>(i) * D;
                const T* qrow = b.q.data() + static_cast<size_t>(i) * D;
                T* drow = work.drow.data();
                for (int h = 0; h < heads; ++h) {
                    const T* arow = b.attn.data() +
                                    (static_cast<size_t>(h) * len + static_cast<size_t>(i)) * len;
                    const T* kth = b.kt.data() + static_cast<size_t>(h) * d * len;
                    const T* vth = b.vt.data() + static_cast<size_t>(h) * d * len;
                    const T g0 = dmrow[static_cast<size_t>(h) * d];
#pragma omp simd
                    for (int j = 0; j < jl; ++j) drow[j] = g0 * vth[j];
                    for (int c = 1; c < d; ++c)
                        axpy(drow, dmrow[static_cast<size_t>(h) * d + c],
                             vth + static_cast<size_t>(c) * len, jl);
                    for (int c = 0; c < d; ++c)
                        axpy(work.dvt.data() + (static_cast<size_t>(h) * d + c) * len,
                             dmrow[static_cast<size_t>(h) * d + c], arow, jl);
                    const T t = dot(arow, drow, jl);
#pragma omp simd
                    for (int j = 0; j < jl; ++j) drow[j] = arow[j] * (drow[j] - t);
                    for (int c = 0; c < d; ++c)
                        work.dq[static_cast<size_t>(i) * D + static_cast<size_t>(h) * d + c] =
                            dot(drow, kth + static_cast<size_t>(c) * len, jl);
                    for (int c = 0; c < d; ++c)
                        axpy(work.dkt.data() + (static_cast<size_t>(h) * d + c) * len,
                             qrow[static_cast<size_t>(h) * d + c], drow, jl);
                }
            }
            for (int o = 0; o < D; ++o) {
                const T* ksrc = work.dkt.data() + static_cast<size_t>(o) * len;
                const T* vsrc = work.dvt.data() + static_cast<size_t>(o) * len;
                for (int j = 0; j < len; ++j) {
                    work.dk[static_cast<size_t>(j) * D + o] += ksrc[j];
                    work.dv[static_cast<size_t>(j) * D + o] += vsrc[j];
                }
            }
        }
        kern::gemm_tn_acc(work.dq.data(), D, b.base1.data(), D, grads + lo.wq, D, len, D, D);
        kern::gemm_tn_acc(work.dk.data(), D, b.base1.data(), D, grads + lo.wk, D, len, D, D);
        kern::gemm_tn_acc(work.dv.data(), D, b.base1.data(), D, grads + lo.wv, D, len, D, D);
        kern::gemm_nn(work.dq.data(), D, th + lo.wq, D, work.dbase.data(), D, len, D, D);
        kern::gemm_nn(work.dk.data(), D, th + lo.wk, D, work.dbase.data(), D, len, D, D, nullptr,
                      nullptr, true);
        kern::gemm_nn(work.dv.data(), D, th + lo.wv, D, work.dbase.data(), D, len, D, D, nullptr,
                      nullptr, true);
        if (cfg.use_layer_norm) {
            ln_backward_rows(work.dbase.data(), 0, len, D, th + lo.ln1g, b.xhat1.data(),
                             b.rstd1.data(), grads + lo.ln1g, grads + lo.ln1b,
                             work.dstream.data());
        } else {
            for (size_t i = 0; i < static_cast<size_t>(len) * D; ++i)
                work.dstream[i] += work.dbase[i];
        }
    }

    for (int i = 0; i < len; ++i) {
        const T* dr = work.dstream.data() + static_cast<size_t>(i) * D;
        T* gt = grads + shape_.tok + static_cast<size_t>(tokens[i]) * D;
        for (int c = 0; c < D; ++c) gt[c] += dr[c];
        if (cfg.use_positional) {
            T* gp = grads + shape_.pos + static_cast<size_t>(i) * D;
            for (int c = 0; c < D; ++c) gp[c] += dr[c];
        }
    }
}

template class Engine<float>;
template class Engine<double>;
template struct EngineWork<float>;
template struct EngineWork<double>;

} // namespace nn
