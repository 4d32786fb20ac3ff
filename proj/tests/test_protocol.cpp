#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "constructions/embeddings.hpp"
#include "protocol/disjointness.hpp"
#include "protocol/quantize.hpp"
#include "util/rng.hpp"

using namespace protocol;

TEST_CASE("quantize rounds to the declared grid") {
    // p=8 over [-1, 1]: multiples of 2^-7
    const double q = quantize(1.0 / 3, 8, 1.0);
    CHECK(q == std::nearbyint((1.0 / 3) * 128) / 128);
    CHECK(quantize(0.0, 8, 1.0) == 0.0);
    CHECK(quantize(-1.0 / 3, 8, 1.0) == -q);
}

TEST_CASE("quantize is idempotent") {
    util::Rng rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        const double x = 10 * (2 * rng.next_double() - 1);
        for (int p : {2, 5, 12, 40}) {
            const double once = quantize(x, p, 4.0);
            CHECK(quantize(once, p, 4.0) == once);
        }
    }
}

TEST_CASE("quantize clamps and flags saturation") {
    bool sat = false;
    const double top = quantize(5.0, 8, 1.0, sat);
    CHECK(sat);
    CHECK(top == doctest::Approx(127.0 / 128).epsilon(1e-12));
    sat = false;
    quantize(-5.0, 8, 1.0, sat);
    CHECK(sat);
    sat = false;
    quantize(0.999, 8, 1.0, sat);
    CHECK(!sat); // inside the range, even though it rounds to the top step
}

TEST_CASE("quantize validates its arguments") {
    CHECK_THROWS_AS(quantize(0.5, 1, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(quantize(0.5, 63, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(quantize(0.5, 8, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(quantize(std::nan(""), 8, 1.0), std::invalid_argument);
}

TEST_CASE("disjointness oracle and validation") {
    DisjointnessInstance inst;
    inst.a = {1, 0, 1, 0};
    inst.b = {0, 1, 1, 0};
    CHECK(disjointness_oracle(inst) == 1);
    inst.b = {0, 1, 0, 1};
    CHECK(disjointness_oracle(inst) == 0);
    inst.b = {0, 1};
    CHECK_THROWS_AS(inst.validate(), std::invalid_argument);
    inst.b = {0, 1, 0, 2};
    CHECK_THROWS_AS(inst.validate(), std::invalid_argument);
}

TEST_CASE("token layout splits the vocab into thirds plus a query") {
    DisjointnessInstance inst;
    inst.a = {1, 0, 1};
    inst.b = {0, 0, 1};
    const auto enc = encode_inputs(inst, 10);
    CHECK(enc.alice == std::vector<int>{0, 4, 2});
    CHECK(enc.bob == std::vector<int>{6, 7, 2});
    CHECK(enc.query == 9);
    CHECK_THROWS_AS(encode_inputs(inst, 9), std::invalid_argument);
}

TEST_CASE("histogram heads are a plain token average") {
    const auto heads = histogram_heads(5);
    CHECK(heads.size() == 1);
    for (double v : heads[0].wq) CHECK(v == 0.0);
    for (double v : heads[0].wk) CHECK(v == 0.0);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j)
            CHECK(heads[0].wv[static_cast<size_t>(i) * 5 + j] == (i == j ? 1.0 : 0.0));
}

TEST_CASE("full-precision transcripts match the oracle exhaustively") {
    const int n = 2, p = 32;
    const int vocab = 3 * n + 1;
    const auto emb = constructions::one_hot_embeddings(vocab, vocab);
    const auto heads = histogram_heads(vocab);
    for (int bits = 0; bits < 16; ++bits) {
        DisjointnessInstance inst;
        inst.a = {static_cast<uint8_t>(bits & 1), static_cast<uint8_t>((bits >> 1) & 1)};
        inst.b = {static_cast<uint8_t>((bits >> 2) & 1), static_cast<uint8_t>((bits >> 3) & 1)};
        const auto t = run_protocol(inst, heads, emb, p);
        CHECK(t.output == disjointness_oracle(inst));
        CHECK(t.total_bits == (vocab + 2) * p + 1);
        CHECK(!t.saturated);
        CHECK(t.n_bits == n);
        CHECK(t.warning.empty());
    }
}

TEST_CASE("transcripts carry four fixed-shape messages") {
    const int n = 3, p = 16;
    const int vocab = 3 * n + 1;
    const auto emb = constructions::one_hot_embeddings(vocab, vocab);
    const auto heads = histogram_heads(vocab);
    DisjointnessInstance inst;
    inst.a = {1, 1, 0};
    inst.b = {1, 0, 1};
    const auto t = run_protocol(inst, heads, emb, p);
    REQUIRE(t.messages.size() == 4);
    CHECK(t.messages[0].sender == 'A');
    CHECK(t.messages[1].sender == 'B');
    CHECK(t.messages[2].sender == 'A');
    CHECK(t.messages[3].sender == 'B');
    CHECK(t.messages[0].bits == p);
    CHECK(t.messages[1].bits == p);
    CHECK(t.messages[2].bits == vocab * p);
    CHECK(t.messages[3].bits == 1);
    long long sum = 0;
    for (const auto& msg : t.messages) sum += msg.bits;
    CHECK(sum == t.total_bits);
    CHECK(t.decoded_mfe >= 1.5); // intersecting instance
    CHECK(t.output == 1);
}

TEST_CASE("wire values are already on the quantizer grid") {
    const int n = 2, p = 9;
    const int vocab = 3 * n + 1;
    const auto emb = constructions::one_hot_embeddings(vocab, vocab);
    const auto heads = histogram_heads(vocab);
    DisjointnessInstance inst;
    inst.a = {1, 0};
    inst.b = {1, 1};
    const auto t = run_protocol(inst, heads, emb, p);
    CHECK(!t.messages[0].values.empty());
    for (const auto& v : t.messages[1].values) CHECK(v >= 0.0);
    // coordinate messages are quantized with range n, so they sit on that grid
    for (const auto& v : t.messages[2].values) CHECK(quantize(v, p, n) == v);
}

TEST_CASE("coarse quantization eventually breaks agreement") {
    const int n = 4;
    const int vocab = 3 * n + 1;
    const auto emb = constructions::one_hot_embeddings(vocab, vocab);
    const auto heads = histogram_heads(vocab);
    int disagreements = 0;
    for (int bits = 0; bits < 256; ++bits) {
        DisjointnessInstance inst;
        inst.a.resize(n);
        inst.b.resize(n);
        for (int i = 0; i < n; ++i) {
            inst.a[i] = (bits >> i) & 1;
            inst.b[i] = (bits >> (n + i)) & 1;
        }
        disagreements += run_protocol(inst, heads, emb, 5).output != disjointness_oracle(inst);
    }
    CHECK(disagreements > 0);
}

TEST_CASE("undersized vocabularies shrink the instance with a warning") {
    const int vocab = 7; // supports n = 2, requested n = 4
    const auto emb = constructions::one_hot_embeddings(vocab, vocab);
    const auto heads = histogram_heads(vocab);
    DisjointnessInstance inst;
    inst.a = {1, 0, 1, 1};
    inst.b = {1, 1, 0, 0};
    const auto t = run_protocol(inst, heads, emb, 32);
    CHECK(t.n_bits == 1);
    CHECK(!t.warning.empty());
}
