#include <chrono>
#include <cmath>
#include <cstdio>
#include <vector>

#include "nn/engine.hpp"
#include "nn/forward.hpp"
#include "nn/kernels.hpp"
#include "nn/model.hpp"
#include "util/rng.hpp"

// Times the OpenMP/simd kernels against their serial reference counterparts
// on engine-shaped workloads, then the packed engine against the plain
// reference forward. Deviation columns bound the reduction-order drift.

namespace {

double now_seconds() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

std::vector<float> random_buffer(size_t count, uint64_t seed) {
    util::Rng rng(seed);
    std::vector<float> buf(count);
    for (auto& v : buf) v = static_cast<float>(rng.next_normal());
    return buf;
}

float max_abs_diff(const std::vector<float>& a, const std::vector<float>& b) {
    float worst = 0;
    for (size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::fabs(a[i] - b[i]));
    return worst;
}

template <typename F>
double time_loop(int reps, F&& body) {
    body(); // warm-up
    const double start = now_seconds();
    for (int r = 0; r < reps; ++r) body();
    return (now_seconds() - start) / reps;
}

void report(const char* name, double ref_s, double opt_s, float dev) {
    std::printf("%-24s %10.3f us %10.3f us %7.2fx   max dev %.3g\n", name, ref_s * 1e6,
                opt_s * 1e6, ref_s / opt_s, static_cast<double>(dev));
}

void bench_gemms() {
    const int M = 1024, N = 256, K = 256;
    const auto A = random_buffer(static_cast<size_t>(M) * K, 1);
    const auto Bt = random_buffer(static_cast<size_t>(N) * K, 2); // N x K for the nt form
    const auto B = random_buffer(static_cast<size_t>(K) * N, 3);  // K x N for the nn form
    const auto G = random_buffer(static_cast<size_t>(M) * N, 4);
    std::vector<float> ref(static_cast<size_t>(M) * N), opt(ref.size());

    double ref_s = time_loop(3, [&] {
        nn::kern::gemm_nt_ref(A.data(), K, Bt.data(), K, ref.data(), N, M, N, K);
    });
    double opt_s = time_loop(3, [&] {
        nn::kern::gemm_nt(A.data(), K, Bt.data(), K, opt.data(), N, M, N, K);
    });
    report("gemm_nt 1024x256x256", ref_s, opt_s, max_abs_diff(ref, opt));

    ref_s = time_loop(3, [&] {
        nn::kern::gemm_nn_ref(A.data(), K, B.data(), N, ref.data(), N, M, N, K);
    });
    opt_s = time_loop(3, [&] {
        nn::kern::gemm_nn(A.data(), K, B.data(), N, opt.data(), N, M, N, K);
    });
    report("gemm_nn 1024x256x256", ref_s, opt_s, max_abs_diff(ref, opt));

    std::vector<float> wref(static_cast<size_t>(N) * K, 0.0f), wopt(wref.size(), 0.0f);
    ref_s = time_loop(3, [&] {
        std::fill(wref.begin(), wref.end(), 0.0f);
        nn::kern::gemm_tn_acc_ref(G.data(), N, A.data(), K, wref.data(), K, M, N, K);
    });
    opt_s = time_loop(3, [&] {
        std::fill(wopt.begin(), wopt.end(), 0.0f);
        nn::kern::gemm_tn_acc(G.data(), N, A.data(), K, wopt.data(), K, M, N, K);
    });
    report("gemm_tn_acc 1024 rows", ref_s, opt_s, max_abs_diff(wref, wopt));

    std::vector<float> tref(static_cast<size_t>(K) * N, 0.0f), topt(tref.size(), 0.0f);
    ref_s = time_loop(3, [&] {
        std::fill(tref.begin(), tref.end(), 0.0f);
        nn::kern::gemm_tn_acc_t_ref(G.data(), N, A.data(), K, tref.data(), N, M, N, K);
    });
    opt_s = time_loop(3, [&] {
        std::fill(topt.begin(), topt.end(), 0.0f);
        nn::kern::gemm_tn_acc_t(G.data(), N, A.data(), K, topt.data(), N, M, N, K);
    });
    report("gemm_tn_acc_t 1024 rows", ref_s, opt_s, max_abs_diff(tref, topt));
}

void bench_exp() {
    const int n = 4096;
    const auto base = random_buffer(n, 7);
    std::vector<float> ref(base), opt(base);

    const double ref_s = time_loop(200, [&] {
        ref = base;
        float sum = 0;
        for (int i = 0; i < n; ++i) {
            ref[i] = std::exp(ref[i] - 1.0f);
            sum += ref[i];
        }
        volatile float sink = sum;
        (void)sink;
    });
    float opt_sum = 0;
    const double opt_s = time_loop(200, [&] {
        opt = base;
        opt_sum = nn::kern::vexp_shift_sum(opt.data(), n, 1.0f);
    });
    (void)opt_sum;
    float rel = 0;
    for (int i = 0; i < n; ++i)
        rel = std::max(rel, std::fabs(opt[i] - ref[i]) / std::max(ref[i], 1e-30f));
    report("vexp_shift_sum 4096", ref_s, opt_s, rel);
}

void bench_engine() {
    nn::TransformerConfig cfg;
    cfg.model_dim = 32;
    cfg.n_layers = 2;
    cfg.n_heads = 4;
    cfg.head_dim = 8;
    cfg.vocab_size = 32;
    cfg.context_len = 320;
    const nn::TransformerModel model = nn::random_model(cfg, 4 * cfg.model_dim, 11);

    util::Rng rng(13);
    std::vector<int> tokens(cfg.context_len);
    for (auto& t : tokens) t = static_cast<int>(rng.next_below(cfg.vocab_size));

    const double ref_s = time_loop(3, [&] {
        volatile double sink = nn::model_forward(model, tokens);
        (void)sink;
    });

    nn::Engine<float> engine(model);
    nn::EngineWork<float> work;
    const double fwd_s = time_loop(10, [&] {
        volatile double sink = engine.forward(tokens.data(), static_cast<int>(tokens.size()), work);
        (void)sink;
    });
    std::vector<float> grads(engine.shape().total, 0.0f);
    const double both_s = time_loop(10, [&] {
        engine.forward(tokens.data(), static_cast<int>(tokens.size()), work);
        engine.backward(tokens.data(), static_cast<int>(tokens.size()), 1.0f, work, grads.data());
    });

    const double ref_out = nn::model_forward(model, tokens);
    engine.forward(tokens.data(), static_cast<int>(tokens.size()), work);
    std::printf("\nengine, D=32 L=2 H=4 len=320 (reference forward %.3f ms)\n", ref_s * 1e3);
    std::printf("  forward           %8.3f ms  (%.1fx reference)\n", fwd_s * 1e3, ref_s / fwd_s);
    std::printf("  forward+backward  %8.3f ms\n", both_s * 1e3);
    std::printf("  reference output %.6f\n", ref_out);
}

} // namespace

int main() {
    std::printf("%-24s %13s %13s %9s\n", "kernel", "reference", "optimized", "speedup");
    bench_gemms();
    bench_exp();
    bench_engine();
    return 0;
}
