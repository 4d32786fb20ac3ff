#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "constructions/qc.hpp"
#include "nn/engine.hpp"
#include "nn/forward.hpp"
#include "util/rng.hpp"

using namespace nn;

namespace {

double rel_err(double a, double b) {
    const double m = std::max({std::fabs(a), std::fabs(b), 1e-8});
    return std::fabs(a - b) / m;
}

std::vector<int> random_tokens(int len, int vocab, uint64_t seed) {
    util::Rng rng(seed);
    std::vector<int> toks(len);
    for (auto& t : toks) t = static_cast<int>(rng.next_below(vocab));
    return toks;
}

TransformerConfig trained_shape() {
    TransformerConfig cfg;
    cfg.n_layers = 2;
    cfg.n_heads = 4;
    cfg.head_dim = 4;
    cfg.model_dim = 16;
    cfg.vocab_size = 5;
    cfg.context_len = 10;
    cfg.use_layer_norm = true;
    cfg.use_positional = true;
    return cfg;
}

} // namespace

TEST_CASE("engine forward matches the reference on random models") {
    struct Shape {
        int layers, heads, head_dim, vocab, len;
        bool ln, pos;
        std::vector<uint8_t> bidir;
    };
    const std::vector<Shape> shapes = {
        {2, 4, 4, 5, 10, true, true, {}},
        {1, 1, 6, 3, 7, false, false, {}},
        {3, 2, 4, 4, 9, true, false, {1, 0, 1}},
    };
    for (const auto& s : shapes) {
        TransformerConfig cfg;
        cfg.n_layers = s.layers;
        cfg.n_heads = s.heads;
        cfg.head_dim = s.head_dim;
        cfg.model_dim = s.heads * s.head_dim;
        cfg.vocab_size = s.vocab;
        cfg.context_len = s.len;
        cfg.use_layer_norm = s.ln;
        cfg.use_positional = s.pos;
        cfg.bidirectional = s.bidir;
        const auto model = random_model(cfg, 3 * cfg.model_dim, 17 + s.layers);
        const auto toks = random_tokens(s.len, s.vocab, 170 + s.layers);

        Engine<double> engine(model);
        EngineWork<double> work;
        const double got = engine.forward(toks.data(), s.len, work);
        const double want = model_forward(model, toks);
        CHECK(rel_err(got, want) < 1e-12);
    }
}

TEST_CASE("engine forward matches the reference on hand-set weights") {
    const auto report = constructions::build_qc_histogram(4, 8);
    const auto toks = random_tokens(8, 4, 5);
    Engine<double> engine(report.model);
    EngineWork<double> work;
    CHECK(rel_err(engine.forward(toks.data(), 8, work), model_forward(report.model, toks)) <
          1e-12);
}

TEST_CASE("float engine tracks the double engine") {
    const auto cfg = trained_shape();
    const auto model = random_model(cfg, 64, 23);
    const auto toks = random_tokens(10, 5, 24);
    Engine<double> e64(model);
    Engine<float> e32(model);
    EngineWork<double> w64;
    EngineWork<float> w32;
    CHECK(rel_err(e32.forward(toks.data(), 10, w32), e64.forward(toks.data(), 10, w64)) < 1e-4);
}

TEST_CASE("model roundtrip through the engine is exact") {
    const auto cfg = trained_shape();
    Engine<double> seeded(cfg, 64);
    seeded.init_random(31);
    const auto model = seeded.to_model();
    const auto back = Engine<double>(model).to_model();
    CHECK(back.token_embeddings == model.token_embeddings);
    CHECK(back.positional_embeddings == model.positional_embeddings);
    for (int l = 0; l < cfg.n_layers; ++l) {
        for (int h = 0; h < cfg.n_heads; ++h) {
            CHECK(back.layers[l].heads[h].wq == model.layers[l].heads[h].wq);
            CHECK(back.layers[l].heads[h].wv == model.layers[l].heads[h].wv);
        }
        CHECK(back.layers[l].mlp.w1 == model.layers[l].mlp.w1);
        CHECK(back.layers[l].ln1_gain == model.layers[l].ln1_gain);
    }
    CHECK(back.readout == model.readout);
}

TEST_CASE("engine rejects non-uniform mlp widths") {
    TransformerConfig cfg;
    cfg.n_layers = 2;
    cfg.head_dim = 4;
    cfg.model_dim = 4;
    cfg.vocab_size = 3;
    cfg.context_len = 5;
    auto model = zero_model(cfg, 6);
    auto& mlp = model.layers[1].mlp;
    mlp.hidden_dim = 9;
    mlp.w1.assign(9 * 4, 0.0);
    mlp.b1.assign(9, 0.0);
    mlp.w2.assign(4 * 9, 0.0);
    CHECK_THROWS_AS(Engine<double>{model}, std::invalid_argument);
}

TEST_CASE("engine validates forward inputs") {
    const auto cfg = trained_shape();
    Engine<double> engine(cfg, 64);
    engine.init_random(3);
    EngineWork<double> work;
    std::vector<int> toks(11, 0);
    CHECK_THROWS_AS(engine.forward(toks.data(), 11, work), std::invalid_argument);
    toks = {0, 1, 5};
    CHECK_THROWS_AS(engine.forward(toks.data(), 3, work), std::invalid_argument);
}

TEST_CASE("init_random is seed-deterministic") {
    const auto cfg = trained_shape();
    Engine<double> a(cfg, 64), b(cfg, 64), c(cfg, 64);
    a.init_random(5);
    b.init_random(5);
    c.init_random(6);
    CHECK(a.params() == b.params());
    CHECK(a.params() != c.params());
}

TEST_CASE("analytic gradients match central differences") {
    // layer norm parameters perturbed away from the (gain 1, bias 0) start so
    // their gradients are generic; tokens drawn from the same stream
    const auto cfg = trained_shape();
    Engine<double> engine(cfg, 64);
    engine.init_random(7);
    util::Rng rng(99);
    auto& theta = engine.params();
    const auto& shape = engine.shape();
    for (const auto& layer : shape.layer)
        for (int c = 0; c < cfg.model_dim; ++c) {
            theta[layer.ln1g + c] += 0.2 * rng.next_normal();
            theta[layer.ln1b + c] += 0.2 * rng.next_normal();
            theta[layer.ln2g + c] += 0.2 * rng.next_normal();
            theta[layer.ln2b + c] += 0.2 * rng.next_normal();
        }
    for (int c = 0; c < cfg.model_dim; ++c) {
        theta[shape.lnfg + c] += 0.2 * rng.next_normal();
        theta[shape.lnfb + c] += 0.2 * rng.next_normal();
    }
    std::vector<int> toks(10);
    for (auto& t : toks) t = static_cast<int>(rng.next_below(5));

    EngineWork<double> work;
    std::vector<double> grads(shape.total, 0.0);
    engine.forward(toks.data(), 10, work);
    engine.backward(toks.data(), 10, 1.0, work, grads.data());

    const double step = 1e-4;
    double worst = 0;
    for (size_t i = 0; i < shape.total; ++i) {
        const double keep = theta[i];
        theta[i] = keep + step;
        const double yp = engine.forward(toks.data(), 10, work);
        theta[i] = keep - step;
        const double ym = engine.forward(toks.data(), 10, work);
        theta[i] = keep;
        worst = std::max(worst, rel_err(grads[i], (yp - ym) / (2 * step)));
    }
    CHECK(worst < 1e-4);
}

TEST_CASE("backward accumulates into the gradient buffer") {
    const auto cfg = trained_shape();
    Engine<double> engine(cfg, 64);
    engine.init_random(13);
    const auto toks = random_tokens(10, 5, 14);
    EngineWork<double> work;
    std::vector<double> once(engine.shape().total, 0.0), twice(once);
    engine.forward(toks.data(), 10, work);
    engine.backward(toks.data(), 10, 1.0, work, once.data());
    engine.forward(toks.data(), 10, work);
    engine.backward(toks.data(), 10, 1.0, work, twice.data());
    engine.forward(toks.data(), 10, work);
    engine.backward(toks.data(), 10, 1.0, work, twice.data());
    for (size_t i = 0; i < once.size(); i += 97)
        CHECK(twice[i] == doctest::Approx(2.0 * once[i]).epsilon(1e-12));
}
