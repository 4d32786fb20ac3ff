#pragma once

#include <cstdint>
#include <vector>

namespace training {

template <typename T>
struct AdamState {
    std::vector<T> m;
    std::vector<T> v;
    int64_t t = 0;

    AdamState() = default;
    explicit AdamState(size_t n) : m(n, 0), v(n, 0) {}
};

// bias-corrected update, applied to params in place
template <typename T>
void adam_step(AdamState<T>& state, std::vector<T>& params, const std::vector<T>& grads,
               double step_size, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

extern template void adam_step<float>(AdamState<float>&, std::vector<float>&,
                                      const std::vector<float>&, double, double, double, double);
extern template void adam_step<double>(AdamState<double>&, std::vector<double>&,
                                       const std::vector<double>&, double, double, double, double);

} // namespace training
