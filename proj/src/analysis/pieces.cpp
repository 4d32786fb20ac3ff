#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "analysis/pieces.hpp"

namespace analysis {

void PiecewiseLinear::validate() const {
    if (!(lo < hi)) throw std::invalid_argument("PiecewiseLinear: requires lo < hi");
    if (xs.size() != ys.size() || xs.size() < 2)
        throw std::invalid_argument("PiecewiseLinear: needs matching xs/ys with >= 2 points");
    for (size_t i = 0; i < xs.size(); ++i) {
        if (!std::isfinite(xs[i]) || !std::isfinite(ys[i]))
            throw std::invalid_argument("PiecewiseLinear: non-finite breakpoint");
        if (xs[i] < lo || xs[i] > hi)
            throw std::invalid_argument("PiecewiseLinear: breakpoint outside domain");
        if (i > 0 && !(xs[i - 1] < xs[i]))
            throw std::invalid_argument("PiecewiseLinear: xs must increase strictly");
    }
}

double PiecewiseLinear::eval(double x) const {
    size_t hi_idx = std::upper_bound(xs.begin(), xs.end(), x) - xs.begin();
    hi_idx = std::min(std::max<size_t>(hi_idx, 1), xs.size() - 1);
    const size_t lo_idx = hi_idx - 1;
    const double t = (x - xs[lo_idx]) / (xs[hi_idx] - xs[lo_idx]);
    return ys[lo_idx] + t * (ys[hi_idx] - ys[lo_idx]);
}

double inverse_chord_error(double a, double b) {
    if (!(a > 0) || !(b >= a)) throw std::invalid_argument("inverse_chord_error: requires 0 < a <= b");
    const double gap = 1.0 / std::sqrt(a) - 1.0 / std::sqrt(b);
    return gap * gap;
}

GreedyPieces min_pieces_inverse_detail(int n, double eps) {
    if (n < 1) throw std::invalid_argument("min_pieces_inverse: n must be positive");
    if (!(eps > 0)) throw std::invalid_argument("min_pieces_inverse: eps must be positive");

    GreedyPieces out;
    out.approx.lo = 1.0 / n;
    out.approx.hi = 1.0;
    out.approx.xs = {1.0 / n};
    out.approx.ys = {static_cast<double>(n)};
    if (n == 1) { // single-point domain
        out.pieces = 1;
        return out;
    }

    double a = 1.0 / n;
    while (a < 1.0 - 1e-12) {
        double b;
        if (inverse_chord_error(a, 1.0) <= eps) {
            b = 1.0;
        } else {
            double lo = a, hi = 1.0;
            while (hi - lo > 1e-12) {
                const double mid = 0.5 * (lo + hi);
                if (inverse_chord_error(a, mid) <= eps) lo = mid;
                else hi = mid;
            }
            b = lo;
        }
        out.approx.xs.push_back(b);
        out.approx.ys.push_back(1.0 / b);
        ++out.pieces;
        a = b;
    }
    return out;
}

int min_pieces_inverse(int n, double eps) { return min_pieces_inverse_detail(n, eps).pieces; }

namespace {

bool pieces_suffice(int n, double eps, int count) {
    const double root_eps = std::sqrt(eps);
    double inv_sqrt = std::sqrt(static_cast<double>(n)); // 1/sqrt(a) at a = 1/n
    for (int i = 0; i < count; ++i) {
        inv_sqrt -= root_eps;
        if (inv_sqrt <= 1.0) return true;
    }
    return false;
}

} // namespace

int min_pieces_inverse_closed_form(int n, double eps) {
    if (n < 1) throw std::invalid_argument("min_pieces_inverse_closed_form: n must be positive");
    if (!(eps > 0)) throw std::invalid_argument("min_pieces_inverse_closed_form: eps must be positive");
    if (n == 1) return 1;

    int lo = 1, hi = 1;
    while (!pieces_suffice(n, eps, hi)) {
        lo = hi + 1;
        hi *= 2;
    }
    while (lo < hi) {
        const int mid = lo + (hi - lo) / 2;
        if (pieces_suffice(n, eps, mid)) hi = mid;
        else lo = mid + 1;
    }
    return lo;
}

int lemma1_lower_bound(int n) {
    if (n < 4) return 1;
    return (n - 1) / 3;
}

} // namespace analysis
