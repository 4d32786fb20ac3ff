#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "analysis/bounds.hpp"
#include "analysis/pieces.hpp"
#include "constructions/embeddings.hpp"
#include "util/rng.hpp"

using namespace analysis;

TEST_CASE("welch bound arithmetic") {
    CHECK(welch_lower_bound(8, 4) == doctest::Approx(std::sqrt(4.0 / (4.0 * 7.0))));
    CHECK(welch_lower_bound(128, 64) == doctest::Approx(std::sqrt(64.0 / (64.0 * 127.0))));
    CHECK_THROWS_AS(welch_lower_bound(4, 4), std::invalid_argument);
    CHECK_THROWS_AS(welch_lower_bound(3, 4), std::invalid_argument);
}

TEST_CASE("max pairwise inner product scans every pair") {
    const auto emb = constructions::one_hot_embeddings(4, 4);
    CHECK(max_pairwise_inner(emb).value == 0.0);

    constructions::EmbeddingSet set;
    set.kind = constructions::EmbeddingKind::rademacher;
    set.m = 3;
    set.d = 2;
    const double r = 1.0 / std::sqrt(2.0);
    set.vectors = {{r, r}, {r, -r}, {-r, -r}};
    const auto mi = max_pairwise_inner(set);
    CHECK(mi.value == doctest::Approx(1.0)); // pair (0, 2) is antipodal
    CHECK(mi.i == 0);
    CHECK(mi.j == 2);

    constructions::EmbeddingSet one;
    one.m = 1;
    one.d = 2;
    one.vectors = {{1.0, 0.0}};
    CHECK_THROWS_AS(max_pairwise_inner(one), std::invalid_argument);
}

TEST_CASE("welch bound is a true floor for crowded frames") {
    for (uint64_t seed = 0; seed < 5; ++seed) {
        const auto emb = random_rademacher_embeddings(24, 8, seed);
        CHECK(max_pairwise_inner(emb).value >= welch_lower_bound(24, 8) - 1e-12);
    }
}

TEST_CASE("rademacher embeddings are unit norm with half-spread coordinates") {
    const auto emb = random_rademacher_embeddings(10, 16, 4);
    const double c = 1.0 / std::sqrt(16.0);
    for (const auto& v : emb.vectors) {
        double norm2 = 0;
        for (double x : v) {
            CHECK(std::fabs(x) == c);
            norm2 += x * x;
        }
        CHECK(norm2 == doctest::Approx(1.0).epsilon(1e-12));
    }
    const auto again = random_rademacher_embeddings(10, 16, 4);
    CHECK(emb.vectors == again.vectors);
    const auto other = random_rademacher_embeddings(10, 16, 5);
    CHECK(emb.vectors != other.vectors);
}

TEST_CASE("crowded rademacher frames stay under the log envelope") {
    const auto emb = random_rademacher_embeddings(1000, 128, 1);
    CHECK(max_pairwise_inner(emb).value <= 5.0 * std::sqrt(std::log(1000.0) / 128.0));
}

TEST_CASE("hoeffding bound arithmetic") {
    CHECK(hoeffding_bound(64, 0.0) == 2.0);
    CHECK(hoeffding_bound(100, 0.3) == doctest::Approx(2.0 * std::exp(-4.5)).epsilon(1e-12));
    CHECK_THROWS_AS(hoeffding_bound(64, -0.1), std::invalid_argument);
    CHECK_THROWS_AS(hoeffding_bound(0, 0.1), std::invalid_argument);
}

TEST_CASE("hoeffding bound dominates the empirical tail") {
    const int d = 64, draws = 10000;
    const double t = 0.4;
    util::Rng rng(12);
    int hits = 0;
    for (int k = 0; k < draws; ++k) {
        double inner = 0;
        for (int c = 0; c < d; ++c) inner += rng.next_sign() * rng.next_sign();
        inner /= d;
        hits += std::fabs(inner) >= t;
    }
    CHECK(static_cast<double>(hits) / draws <= hoeffding_bound(d, t));
}

TEST_CASE("chord error formula matches a dense scan") {
    const double a = 0.2, b = 0.7;
    const double claimed = inverse_chord_error(a, b);
    const double ya = 1 / a, yb = 1 / b;
    double worst = 0;
    for (int i = 0; i <= 10000; ++i) {
        const double x = a + (b - a) * i / 10000.0;
        const double chord = ya + (yb - ya) * (x - a) / (b - a);
        worst = std::max(worst, chord - 1 / x);
    }
    CHECK(claimed == doctest::Approx(worst).epsilon(1e-6));
    CHECK(inverse_chord_error(0.5, 0.5) == 0.0);
}

TEST_CASE("piecewise approximations validate and stay within budget") {
    const double eps = 0.5;
    for (int n : {4, 16, 32}) {
        const auto detail = min_pieces_inverse_detail(n, eps);
        CHECK_NOTHROW(detail.approx.validate());
        CHECK(static_cast<int>(detail.approx.xs.size()) == detail.pieces + 1);
        for (int i = 0; i <= 2000; ++i) {
            const double x = 1.0 / n + (1.0 - 1.0 / n) * i / 2000.0;
            CHECK(std::fabs(detail.approx.eval(x) - 1.0 / x) <= eps + 1e-9);
        }
    }
}

TEST_CASE("piecewise validation rejects malformed breakpoints") {
    PiecewiseLinear pl;
    pl.lo = 0.0;
    pl.hi = 1.0;
    pl.xs = {0.0, 0.5, 0.5};
    pl.ys = {1.0, 2.0, 3.0};
    CHECK_THROWS_AS(pl.validate(), std::invalid_argument); // not strictly increasing
    pl.xs = {0.0, 1.0};
    CHECK_THROWS_AS(pl.validate(), std::invalid_argument); // size mismatch
}

TEST_CASE("one chord suffices for a shallow grid") {
    CHECK(min_pieces_inverse(2, 0.5) == 1);
    CHECK(min_pieces_inverse(1, 0.5) == 1);
    CHECK_THROWS_AS(min_pieces_inverse(4, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(min_pieces_inverse(0, 0.5), std::invalid_argument);
}

TEST_CASE("greedy sweep agrees with the closed-form verifier") {
    for (int n = 2; n <= 64; ++n)
        CHECK(min_pieces_inverse(n, 0.5) == min_pieces_inverse_closed_form(n, 0.5));
    CHECK(min_pieces_inverse(48, 0.1) == min_pieces_inverse_closed_form(48, 0.1));
}

TEST_CASE("piece counts grow and stay under the neuron budget") {
    int prev = 0;
    for (int n : {16, 64, 256}) {
        const int pieces = min_pieces_inverse(n, 0.5);
        CHECK(pieces > prev);
        CHECK(pieces <= 8 * n);
        prev = pieces;
    }
}

TEST_CASE("claimed breakpoint lower bound arithmetic") {
    CHECK(lemma1_lower_bound(10) == 3);
    CHECK(lemma1_lower_bound(4) == 1);
    CHECK(lemma1_lower_bound(3) == 1);
    CHECK(lemma1_lower_bound(256) == 85);
}

TEST_CASE("required temperature arithmetic and monotonicity") {
    CHECK(required_temperature(1, 0.0) == 1.0);
    CHECK(required_temperature(100, 0.5) == 11.0);
    CHECK_THROWS_AS(required_temperature(4, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(required_temperature(0, 0.0), std::invalid_argument);
    double prev = 0;
    for (int n : {1, 2, 8, 64, 512}) {
        const double t = required_temperature(n, 0.3);
        CHECK(t >= prev);
        prev = t;
    }
    prev = 0;
    for (double j : {0.0, 0.2, 0.5, 0.9}) {
        const double t = required_temperature(32, j);
        CHECK(t >= prev);
        prev = t;
    }
}
