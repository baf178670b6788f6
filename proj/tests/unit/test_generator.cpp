#include "doctest.h"

#include "fixture.hpp"
#include "mge/errors.hpp"
#include "mge/generator.hpp"
#include "mge/parallel.hpp"
#include "mge/pool_store.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace mge;
using mge::testing::desk;

namespace {

Vec random_vec(std::size_t n, std::uint64_t seed) {
    RngStream rng(seed);
    Vec v(n);
    for (auto& x : v) x = 2 * rng.uniform01() - 1;
    return v;
}

// Smallest prefix of the energy-sorted coefficients reaching t.
std::vector<std::uint8_t> mask_oracle(const Vec& c, double t) {
    std::vector<std::size_t> idx(c.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return c[a] * c[a] > c[b] * c[b]; });
    double total = 0;
    for (double v : c) total += v * v;
    std::vector<std::uint8_t> keep(c.size(), 0);
    double run = 0;
    for (auto i : idx) {
        if (run / total >= t) break;
        keep[i] = 1;
        run += c[i] * c[i];
    }
    return keep;
}

} // namespace

TEST_CASE("importance mask is the minimal energy prefix") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Vec c = random_vec(50 + seed, seed);
        for (double t : {0.1, 0.5, 0.8, 0.95}) {
            const LayerMask m = mask_from_coefficients(c, t);
            CHECK(m.retained == mask_oracle(c, t));
            CHECK(m.retained_fraction >= t - 1e-12);
        }
    }
    const Vec c = random_vec(30, 99);
    CHECK(mask_from_coefficients(c, 1.0).kept() == 30);
    CHECK(mask_from_coefficients(c, 0.0).kept() == 0);
    CHECK_THROWS_AS(mask_from_coefficients(Vec(5, 0.0), 0.8), DegenerateSpectrumError);
    CHECK_THROWS_AS(mask_from_coefficients(c, 1.5), ConfigError);
}

TEST_CASE("generate_layer keeps retained coefficients and places draws elsewhere") {
    const Vec layer = random_vec(97, 1);
    const Vec coeffs = dct2(layer);
    const LayerMask mask = importance_mask(layer, 0.8);
    RngStream rng(5);
    const GeneratedLayer g = generate_layer(layer, mask, 0.1, rng);
    CHECK(g.latent.size() == mask.size() - mask.kept());

    // Splice oracle: retained from the original spectrum, latent in index order.
    Vec merged = coeffs;
    std::size_t next = 0;
    for (std::size_t i = 0; i < merged.size(); ++i)
        if (!mask.retained[i]) merged[i] = g.latent[next++];
    const Vec expected = idct2(merged);
    for (std::size_t i = 0; i < layer.size(); ++i) CHECK(g.values[i] == doctest::Approx(expected[i]).epsilon(1e-12));

    const Vec back = dct2(g.values);
    next = 0;
    for (std::size_t i = 0; i < back.size(); ++i) {
        if (mask.retained[i]) {
            CHECK(std::abs(back[i] - coeffs[i]) < 1e-12);
        } else {
            CHECK(std::abs(g.latent[next]) <= 0.1);
            CHECK(std::abs(back[i] - g.latent[next++]) < 1e-12);
        }
    }
}

TEST_CASE("t = 1 reproduces the base model") {
    const auto& f = desk();
    GeneratorConfig cfg;
    cfg.t = 1.0;
    const Generator gen(f.spec, f.base, cfg, f.data.validation);
    const PoolResult pool = gen.pool(20);
    CHECK(pool.accepted.size() == 20);
    CHECK(pool.attempts == 20);
    for (const auto& c : pool.accepted) {
        for (std::size_t t = 0; t < c.params.size(); ++t)
            for (std::size_t k = 0; k < c.params[t].values.size(); ++k)
                REQUIRE(std::abs(c.params[t].values[k] - f.base[t].values[k]) <= 1e-9);
        CHECK(c.val_accuracy == gen.base_accuracy());
    }
}

TEST_CASE("acceptance predicate") {
    CHECK(accept(0.9825, 0.9805, 0.05));
    CHECK(accept(0.9805, 0.9825, 0.05));
    CHECK(accept(0.91, 0.9, 0.0));
    CHECK_FALSE(accept(0.7, 0.8, 0.05));
    CHECK_FALSE(accept(0.5, 0.75, 0.25)); // |difference| == epsilon is not enough
    CHECK(accept(0.5, 0.75, 0.2500001));
}

TEST_CASE("pools are accepted, reproducible and independent of the worker count") {
    const auto& f = desk();
    GeneratorConfig cfg;
    cfg.seed = 17;
    set_worker_count(1);
    const PoolResult a = generate_pool(f.base, f.spec, cfg, f.data.validation, 6);
    set_worker_count(4);
    const PoolResult b = generate_pool(f.base, f.spec, cfg, f.data.validation, 6);
    set_worker_count(1);
    REQUIRE(a.accepted.size() == 6);
    CHECK(a.attempts == b.attempts);
    for (std::size_t i = 0; i < 6; ++i) {
        CHECK(a.accepted[i].params == b.accepted[i].params);
        CHECK(a.accepted[i].id == b.accepted[i].id);
        CHECK(accept(a.accepted[i].val_accuracy, a.base_accuracy, cfg.epsilon));
        // Stored precision gives the same verdict.
        const ParamSet stored = decode_model(encode_model(a.accepted[i].params));
        CHECK(evaluate_accuracy(f.spec, stored, f.data.validation) == a.accepted[i].val_accuracy);
    }
    CHECK(a.accepted[0].params != f.base);
}

TEST_CASE("attempt streams give each tensor its own draws") {
    const auto& f = desk();
    GeneratorConfig cfg;
    cfg.seed = 3;
    const Generator gen(f.spec, f.base, cfg, f.data.validation);
    const Candidate c = gen.attempt(4, cfg.z);
    for (std::size_t i = 0; i < f.base.size(); ++i) {
        RngStream rng = gen.attempt_stream(4).child(i);
        const GeneratedLayer g = generate_layer(f.base[i].values, gen.mask().layers[i], cfg.z, rng);
        CHECK(g.latent == c.latent[i]);
    }
    const Candidate single = generate_model(f.base, f.spec, cfg, f.data.validation);
    CHECK(single.params == gen.attempt(0, cfg.z).params);
}

TEST_CASE("an unbeatable base with zero tolerance fails generation") {
    const auto& f = desk();
    // One validation example the base gets right: accuracy 1, nothing can beat it.
    std::size_t hit = 0;
    while (argmax(forward(f.spec, f.base.rounded_f32(), f.data.validation.example(hit))) != f.data.validation.labels[hit]) ++hit;
    const Dataset one = f.data.validation.slice(hit, hit + 1, Split::validation);
    GeneratorConfig cfg;
    cfg.epsilon = 0.0;
    cfg.n_D = 3;
    try {
        generate_pool(f.base, f.spec, cfg, one, 2);
        FAIL("expected generation to fail");
    } catch (const GenerationFailedError& e) {
        CHECK(e.attempts == 6);
        CHECK(e.accepted == 0);
    }
}

TEST_CASE("adaptive bound halves z after repeated rejections") {
    const auto& f = desk();
    std::size_t hit = 0;
    while (argmax(forward(f.spec, f.base.rounded_f32(), f.data.validation.example(hit))) != f.data.validation.labels[hit]) ++hit;
    const Dataset one = f.data.validation.slice(hit, hit + 1, Split::validation);
    GeneratorConfig cfg;
    cfg.epsilon = 0.0;
    cfg.n_D = 4;
    cfg.adaptive_after = 2;
    const Generator gen(f.spec, f.base, cfg, one);
    CHECK_THROWS_AS(gen.pool(1), GenerationFailedError);
}

TEST_CASE("generator configuration ranges") {
    GeneratorConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    for (double z : {0.0, -0.1, 0.21}) {
        cfg = {};
        cfg.z = z;
        CHECK_THROWS_AS(cfg.validate(), ConfigError);
    }
    cfg = {};
    cfg.t = 1.2;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.n_D = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.epsilon = -0.01;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    CHECK(GeneratorConfig{}.t == 0.8);
    CHECK(GeneratorConfig{}.n_D == 100);
    CHECK(GeneratorConfig{}.epsilon == 0.05);
}

TEST_CASE("an all-zero tensor cannot be generated from") {
    const auto& f = desk();
    ParamSet zeroed = f.base;
    std::fill(zeroed[1].values.begin(), zeroed[1].values.end(), 0.0);
    CHECK_THROWS_AS(Generator(f.spec, zeroed, GeneratorConfig{}, f.data.validation), DegenerateSpectrumError);
}
