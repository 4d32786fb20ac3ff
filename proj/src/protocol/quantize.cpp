#include <cmath>
#include <stdexcept>

#include "protocol/quantize.hpp"

namespace protocol {

double quantize(double x, int p, double range, bool& saturated) {
    if (p < 2 || p > 62) throw std::invalid_argument("quantize: p must lie in [2, 62]");
    if (!(range > 0)) throw std::invalid_argument("quantize: range must be positive");
    if (!std::isfinite(x)) throw std::invalid_argument("quantize: non-finite input");

    if (std::abs(x) > range) saturated = true;
    const double step = range * std::ldexp(1.0, 1 - p);
    const double kmax = std::ldexp(1.0, p - 1) - 1.0;
    double k = std::nearbyint(x / step);
    k = std::min(std::max(k, -kmax), kmax);
    return k * step;
}

double quantize(double x, int p, double range) {
    bool saturated = false;
    return quantize(x, p, range, saturated);
}

} // namespace protocol
