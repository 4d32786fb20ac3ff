#pragma once

#include <vector>

namespace analysis {

// Continuous piecewise-linear function given by breakpoints; evaluation
// interpolates and extends the end segments.
struct PiecewiseLinear {
    double lo = 0;
    double hi = 0;
    std::vector<double> xs; // strictly increasing, within [lo, hi]
    std::vector<double> ys;

    void validate() const;
    double eval(double x) const;
};

// Minimal piece count of a continuous piecewise-linear approximation of 1/x
// on [1/n, 1] with L-inf error <= eps. Greedy farthest-reach sweep: each
// chord's worst error against 1/x is (1/sqrt(a) - 1/sqrt(b))^2, attained at
// x = sqrt(ab), and the right endpoint is pushed out by bisection; greedy is
// optimal for convex targets. n = 1 degenerates to a point, count 1.
// Rejects eps <= 0 and n < 1.
int min_pieces_inverse(int n, double eps);

struct GreedyPieces {
    int pieces = 0;
    PiecewiseLinear approx;
};
GreedyPieces min_pieces_inverse_detail(int n, double eps);

// Independent verifier: binary search on the count, advancing each piece by
// the closed-form maximal reach b = 1/(1/sqrt(a) - sqrt(eps))^2.
int min_pieces_inverse_closed_form(int n, double eps);

// floor((n-1)/3) disjoint intervals (1/k, 1/(k-3)) each claimed to force a
// breakpoint; returns 1 for n < 4.
int lemma1_lower_bound(int n);

// Worst chord-vs-1/x gap on [a, b], 0 < a <= b.
double inverse_chord_error(double a, double b);

} // namespace analysis
