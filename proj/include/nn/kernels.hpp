#pragma once

#include <cstring>
#include <cmath>
#include <cstdint>

namespace nn::kern {

// Dense kernels used by the training/eval engine, BLAS-style with leading
// dimensions so head slices of row-major buffers can be addressed in place.
// The *_ref versions are plain loops kept as ground truth; tests and the bench
// compare the optimized versions against them. OpenMP splits are always by
// output row with identical per-row arithmetic, so results are bit-equal to
// the serial run at any thread count.

inline constexpr int kOmpRowThreshold = 512;

// ---- reference kernels ----

// C[i][j] = sum_k A[i][k] * B[j][k]; A: MxK (lda), B: NxK (ldb), C: MxN (ldc).
// row_limit restricts row i to j < row_limit[i]; k_limit restricts its dots
// to k < k_limit[i].
template <typename T>
void gemm_nt_ref(const T* A, int lda, const T* B, int ldb, T* C, int ldc, int M, int N, int K,
                 const int* row_limit = nullptr, bool acc = false,
                 const int* k_limit = nullptr) {
    for (int i = 0; i < M; ++i) {
        const int jmax = row_limit ? row_limit[i] : N;
        const int kmax = k_limit ? k_limit[i] : K;
        for (int j = 0; j < jmax; ++j) {
            T v = 0;
            for (int k = 0; k < kmax; ++k)
                v += A[static_cast<size_t>(i) * lda + k] * B[static_cast<size_t>(j) * ldb + k];
            T* c = C + static_cast<size_t>(i) * ldc + j;
            *c = acc ? *c + v : v;
        }
    }
}

// C[i][j] = sum_k A[i][k] * B[k][j]; A: MxK (lda), B: KxN (ldb), C: MxN (ldc).
// k_limit restricts row i to k < k_limit[i]; n_limit restricts to j < n_limit[i].
template <typename T>
void gemm_nn_ref(const T* A, int lda, const T* B, int ldb, T* C, int ldc, int M, int N, int K,
                 const int* k_limit = nullptr, const int* n_limit = nullptr, bool acc = false) {
    for (int i = 0; i < M; ++i) {
        const int jmax = n_limit ? n_limit[i] : N;
        const int kmax = k_limit ? k_limit[i] : K;
        T* crow = C + static_cast<size_t>(i) * ldc;
        if (!acc)
            for (int j = 0; j < jmax; ++j) crow[j] = 0;
        for (int k = 0; k < kmax; ++k) {
            const T a = A[static_cast<size_t>(i) * lda + k];
            const T* brow = B + static_cast<size_t>(k) * ldb;
            for (int j = 0; j < jmax; ++j) crow[j] += a * brow[j];
        }
    }
}

// W[o][c] += sum_i G[i][o] * X[i][c]; G: MxN (ldg), X: MxK (ldx), W: NxK (ldw).
template <typename T>
void gemm_tn_acc_ref(const T* G, int ldg, const T* X, int ldx, T* W, int ldw, int M, int N,
                     int K) {
    for (int o = 0; o < N; ++o)
        for (int i = 0; i < M; ++i) {
            const T g = G[static_cast<size_t>(i) * ldg + o];
            if (g == 0) continue;
            for (int c = 0; c < K; ++c)
                W[static_cast<size_t>(o) * ldw + c] += g * X[static_cast<size_t>(i) * ldx + c];
        }
}

// Same contraction with W transposed: Wt[c][o] += sum_i X[i][c] * G[i][o];
// o_limit restricts term i to o < o_limit[i]. Keeps the axpy N-wide when K is
// a narrow head dim.
template <typename T>
void gemm_tn_acc_t_ref(const T* G, int ldg, const T* X, int ldx, T* Wt, int ldwt, int M, int N,
                       int K, const int* o_limit = nullptr) {
    for (int c = 0; c < K; ++c)
        for (int i = 0; i < M; ++i) {
            const T g = X[static_cast<size_t>(i) * ldx + c];
            const int omax = o_limit ? o_limit[i] : N;
            for (int o = 0; o < omax; ++o)
                Wt[static_cast<size_t>(c) * ldwt + o] += g * G[static_cast<size_t>(i) * ldg + o];
        }
}

// ---- optimized kernels ----

template <typename T>
void gemm_nt_row(const T* A, int lda, const T* B, int ldb, T* C, int ldc, int N, int K, int i,
                 const int* row_limit, bool acc, const int* k_limit) {
    const int jmax = row_limit ? row_limit[i] : N;
    const int kmax = k_limit ? k_limit[i] : K;
    const T* arow = A + static_cast<size_t>(i) * lda;
    T* crow = C + static_cast<size_t>(i) * ldc;
    int j = 0;
    for (; j + 4 <= jmax; j += 4) {
        const T* b0 = B + static_cast<size_t>(j) * ldb;
        const T* b1 = b0 + ldb;
        const T* b2 = b1 + ldb;
        const T* b3 = b2 + ldb;
        T acc0 = 0, acc1 = 0, acc2 = 0, acc3 = 0;
#pragma omp simd reduction(+ : acc0, acc1, acc2, acc3)
        for (int k = 0; k < kmax; ++k) {
            const T a = arow[k];
            acc0 += a * b0[k];
            acc1 += a * b1[k];
            acc2 += a * b2[k];
            acc3 += a * b3[k];
        }
        if (acc) {
            crow[j] += acc0;
            crow[j + 1] += acc1;
            crow[j + 2] += acc2;
            crow[j + 3] += acc3;
        } else {
            crow[j] = acc0;
            crow[j + 1] = acc1;
            crow[j + 2] = acc2;
            crow[j + 3] = acc3;
        }
    }
    for (; j < jmax; ++j) {
        const T* brow = B + static_cast<size_t>(j) * ldb;
        T v = 0;
#pragma omp simd reduction(+ : v)
        for (int k = 0; k < kmax; ++k) v += arow[k] * brow[k];
        crow[j] = acc ? crow[j] + v : v;
    }
}

template <typename T>
void gemm_nt(const T* A, int lda, const T* B, int ldb, T* C, int ldc, int M, int N, int K,
             const int* row_limit = nullptr, bool acc = false, const int* k_limit = nullptr) {
#pragma omp parallel for schedule(static) if (M >= kOmpRowThreshold)
    for (int i = 0; i < M; ++i)
        gemm_nt_row(A, lda, B, ldb, C, ldc, N, K, i, row_limit, acc, k_limit);
}

template <typename T>
void gemm_nn_row(const T* A, int lda, const T* B, int ldb, T* C, int ldc, int N, int K, int i,
                 const int* k_limit, const int* n_limit, bool acc) {
    const int jmax = n_limit ? n_limit[i] : N;
    const int kmax = k_limit ? k_limit[i] : K;
    const T* arow = A + static_cast<size_t>(i) * lda;
    T* crow = C + static_cast<size_t>(i) * ldc;
    if (!acc)
        for (int j = 0; j < jmax; ++j) crow[j] = 0;
    int k = 0;
    for (; k + 2 <= kmax; k += 2) {
        const T a0 = arow[k];
        const T a1 = arow[k + 1];
        const T* b0 = B + static_cast<size_t>(k) * ldb;
        const T* b1 = b0 + ldb;
#pragma omp simd
        for (int j = 0; j < jmax; ++j) crow[j] += a0 * b0[j] + a1 * b1[j];
    }
    for (; k < kmax; ++k) {
        const T a = arow[k];
        const T* brow = B + static_cast<size_t>(k) * ldb;
#pragma omp simd
        for (int j = 0; j < jmax; ++j) crow[j] += a * brow[j];
    }
}

template <typename T>
void gemm_nn(const T* A, int lda, const T* B, int ldb, T* C, int ldc, int M, int N, int K,
             const int* k_limit = nullptr, const int* n_limit = nullptr, bool acc = false) {
#pragma omp parallel for schedule(static) if (M >= kOmpRowThreshold)
    for (int i = 0; i < M; ++i)
        gemm_nn_row(A, lda, B, ldb, C, ldc, N, K, i, k_limit, n_limit, acc);
}

template <typename T>
void gemm_tn_acc(const T* G, int ldg, const T* X, int ldx, T* W, int ldw, int M, int N, int K) {
    // accumulation across i makes the o axis the safe parallel split
#pragma omp parallel for schedule(static) if (N >= kOmpRowThreshold)
    for (int o = 0; o < N; ++o) {
        T* wrow = W + static_cast<size_t>(o) * ldw;
        for (int i = 0; i < M; ++i) {
            const T g = G[static_cast<size_t>(i) * ldg + o];
            if (g == 0) continue;
            const T* xrow = X + static_cast<size_t>(i) * ldx;
#pragma omp simd
            for (int c = 0; c < K; ++c) wrow[c] += g * xrow[c];
        }
    }
}

template <typename T>
void gemm_tn_acc_t(const T* G, int ldg, const T* X, int ldx, T* Wt, int ldwt, int M, int N,
                   int K, const int* o_limit = nullptr) {
    for (int c = 0; c < K; ++c) {
        T* wrow = Wt + static_cast<size_t>(c) * ldwt;
        for (int i = 0; i < M; ++i) {
            const T g = X[static_cast<size_t>(i) * ldx + c];
            if (g == 0) continue;
            const int omax = o_limit ? o_limit[i] : N;
            const T* grow = G + static_cast<size_t>(i) * ldg;
#pragma omp simd
            for (int o = 0; o < omax; ++o) wrow[o] += g * grow[o];
        }
    }
}

// ---- exp ----

// exp(x - shift) over a float array, returning the sum. Cephes-style
// polynomial after range reduction; max relative error ~2e-7, below fp32
// rounding noise for softmax use. shift is the row max, so arguments are <= 0
// and cannot overflow; very negative arguments clamp to exp(-87.3) ~ 1e-38.
// Chunked passes: the float->bits reinterpretation goes through one bulk
// memcpy per chunk, which the compiler vectorizes (a bit_cast in the loop
// body defeats the vectorizer).
inline float vexp_shift_sum(float* x, int n, float shift) {
    constexpr int kChunk = 256;
    alignas(64) float r[kChunk];
    alignas(64) float mf[kChunk];
    alignas(64) int32_t bits[kChunk];
    alignas(64) float scale[kChunk];
    float sum = 0;
    for (int base = 0; base < n; base += kChunk) {
        const int c = n - base < kChunk ? n - base : kChunk;
        float* xx = x + base;
#pragma omp simd
        for (int i = 0; i < c; ++i) {
            float v = xx[i] - shift;
            v = v < -87.33654f ? -87.33654f : v;
            const float z = v * 1.44269504088896341f;
            // magic-number round to nearest integer; |z| < 2^22 always
            const float fl = z + 12582912.0f;
            const float m = fl - 12582912.0f;
            mf[i] = m;
            r[i] = v - m * 0.693359375f + m * 2.12194440e-4f;
        }
#pragma omp simd
        for (int i = 0; i < c; ++i)
            bits[i] = (static_cast<int32_t>(mf[i]) + 127) << 23;
        std::memcpy(scale, bits, sizeof(float) * static_cast<size_t>(c));
#pragma omp simd reduction(+ : sum)
        for (int i = 0; i < c; ++i) {
            const float t = r[i];
            float p = 1.9875691500e-4f;
            p = p * t + 1.3981999507e-3f;
            p = p * t + 8.3334519073e-3f;
            p = p * t + 4.1665795894e-2f;
            p = p * t + 1.6666665459e-1f;
            p = p * t + 5.0000001201e-1f;
            p = p * t * t + t + 1.0f;
            const float e = p * scale[i];
            xx[i] = e;
            sum += e;
        }
    }
    return sum;
}

inline double vexp_shift_sum(double* x, int n, double shift) {
    double sum = 0;
    for (int i = 0; i < n; ++i) {
        x[i] = std::exp(x[i] - shift);
        sum += x[i];
    }
    return sum;
}

} // namespace nn::kern
