#include "training/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace training {

template <typename T>
void adam_step(AdamState<T>& state, std::vector<T>& params, const std::vector<T>& grads,
               double step_size, double beta1, double beta2, double eps) {
    if (state.m.empty() && state.v.empty()) {
        state.m.assign(params.size(), 0);
        state.v.assign(params.size(), 0);
    }
    if (state.m.size() != params.size() || state.v.size() != params.size() ||
        grads.size() != params.size())
        throw std::invalid_argument("adam_step: shape mismatch");
    state.t += 1;
    const T b1 = static_cast<T>(beta1);
    const T b2 = static_cast<T>(beta2);
    const T c1 = static_cast<T>(1 - beta1);
    const T c2 = static_cast<T>(1 - beta2);
    const T lr1 = static_cast<T>(step_size /
                                 (1.0 - std::pow(beta1, static_cast<double>(state.t))));
    const T inv2 = static_cast<T>(1.0 / (1.0 - std::pow(beta2, static_cast<double>(state.t))));
    const T e = static_cast<T>(eps);
    T* m = state.m.data();
    T* v = state.v.data();
    T* p = params.data();
    const T* g = grads.data();
    const size_t n = params.size();
#pragma omp simd
    for (size_t i = 0; i < n; ++i) {
        m[i] = b1 * m[i] + c1 * g[i];
        v[i] = b2 * v[i] + c2 * g[i] * g[i];
        p[i] -= lr1 * m[i] / (std::sqrt(v[i] * inv2) + e);
    }
}

template void adam_step<float>(AdamState<float>&, std::vector<float>&, const std::vector<float>&,
                               double, double, double, double);
template void adam_step<double>(AdamState<double>&, std::vector<double>&,
                                const std::vector<double>&, double, double, double, double);

} // namespace training
