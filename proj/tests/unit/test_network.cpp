#include "doctest.h"

#include "mge/errors.hpp"
#include "mge/network.hpp"

#include <cmath>

using namespace mge;

namespace {

ParamSet random_params(const NetworkSpec& spec, std::uint64_t seed, double scale = 0.5) {
    ParamSet p = zero_params(spec);
    RngStream rng(seed);
    for (auto& t : p.tensors())
        for (auto& v : t.values) v = scale * (2 * rng.uniform01() - 1);
    return p;
}

Vec random_input(std::size_t n, std::uint64_t seed) {
    RngStream rng(seed);
    Vec x(n);
    for (auto& v : x) v = rng.uniform01();
    return x;
}

// y = W x + b with W stored [out, in].
Vec matvec(const ParamTensor& w, const ParamTensor& b, const Vec& x) {
    const std::size_t out = w.shape[0], in = w.shape[1];
    Vec y(out);
    for (std::size_t o = 0; o < out; ++o) {
        double s = b.values[o];
        for (std::size_t i = 0; i < in; ++i) s += w.values[o * in + i] * x[i];
        y[o] = s;
    }
    return y;
}

double loss_at(const NetworkSpec& spec, const ParamSet& p, const Vec& x, int label) {
    return cross_entropy(forward(spec, p, x), label);
}

void check_gradients(const NetworkSpec& spec, std::uint64_t seed, int label) {
    const ParamSet p = random_params(spec, seed);
    const Vec x = random_input(spec.input_size(), seed + 1);
    const Gradients g = backprop(spec, p, x, label, true, true);
    CHECK(g.loss == doctest::Approx(loss_at(spec, p, x, label)).epsilon(1e-12));

    const double h = 1e-6;
    for (std::size_t t = 0; t < p.size(); ++t) {
        for (std::size_t k = 0; k < p[t].values.size(); k += 1 + p[t].values.size() / 40) {
            ParamSet plus = p, minus = p;
            plus[t].values[k] += h;
            minus[t].values[k] -= h;
            const double fd = (loss_at(spec, plus, x, label) - loss_at(spec, minus, x, label)) / (2 * h);
            INFO(p[t].name << "[" << k << "]");
            CHECK(g.params[t].values[k] == doctest::Approx(fd).epsilon(1e-5).scale(1e-3));
        }
    }
    for (std::size_t k = 0; k < x.size(); k += 1 + x.size() / 40) {
        Vec plus = x, minus = x;
        plus[k] += h;
        minus[k] -= h;
        const double fd = (loss_at(spec, p, plus, label) - loss_at(spec, p, minus, label)) / (2 * h);
        INFO("input[" << k << "]");
        CHECK(g.input[k] == doctest::Approx(fd).epsilon(1e-5).scale(1e-3));
    }
    CHECK(input_gradient(spec, p, x, label) == g.input);
}

} // namespace

TEST_CASE("dense forward pass equals explicit matrix products") {
    const NetworkSpec spec = make_mlp(5, {7, 4}, 3);
    const ParamSet p = random_params(spec, 3);
    const Vec x = random_input(5, 4);
    Vec h1 = matvec(p[0], p[1], x);
    for (auto& v : h1) v = std::max(0.0, v);
    Vec h2 = matvec(p[2], p[3], h1);
    for (auto& v : h2) v = std::max(0.0, v);
    const Vec expected = matvec(p[4], p[5], h2);
    const Vec got = forward(spec, p, x);
    REQUIRE(got.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) CHECK(got[i] == doctest::Approx(expected[i]).epsilon(1e-13));
}

TEST_CASE("convolution forward pass equals the direct sliding-window sum") {
    NetworkSpec spec;
    spec.input_shape = {2, 6, 5};
    spec.classes = 2;
    spec.layers = {LayerDesc::conv(2, 3, 3), LayerDesc::flatten(), LayerDesc::dense(3 * 4 * 3, 2)};
    spec.validate();
    const ParamSet p = random_params(spec, 11);
    const Vec x = random_input(60, 12);

    // Conv weights [out, in, k, k], valid padding, stride 1.
    Vec conv(3 * 4 * 3);
    for (std::size_t o = 0; o < 3; ++o)
        for (std::size_t r = 0; r < 4; ++r)
            for (std::size_t c = 0; c < 3; ++c) {
                double s = p[1].values[o];
                for (std::size_t i = 0; i < 2; ++i)
                    for (std::size_t u = 0; u < 3; ++u)
                        for (std::size_t v = 0; v < 3; ++v)
                            s += p[0].values[((o * 2 + i) * 3 + u) * 3 + v] * x[(i * 6 + r + u) * 5 + c + v];
                conv[(o * 4 + r) * 3 + c] = s;
            }
    const Vec expected = matvec(p[2], p[3], conv);
    const Vec got = forward(spec, p, x);
    for (std::size_t i = 0; i < 2; ++i) CHECK(got[i] == doctest::Approx(expected[i]).epsilon(1e-12));
}

TEST_CASE("max pooling keeps the largest value in each window") {
    NetworkSpec spec;
    spec.input_shape = {1, 4, 4};
    spec.classes = 4;
    spec.layers = {LayerDesc::maxpool(2), LayerDesc::flatten(), LayerDesc::dense(4, 4)};
    ParamSet p = zero_params(spec);
    for (std::size_t i = 0; i < 4; ++i) p[0].values[i * 4 + i] = 1.0; // identity
    const Vec x{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16};
    CHECK(forward(spec, p, x) == Vec{6, 8, 14, 16});
}

TEST_CASE("backprop matches central finite differences") {
    SUBCASE("mlp") { check_gradients(make_mlp(6, {8, 5}, 4), 21, 2); }
    SUBCASE("tanh mlp") {
        NetworkSpec spec;
        spec.input_shape = {5};
        spec.classes = 3;
        spec.layers = {LayerDesc::dense(5, 6), LayerDesc::tanh(), LayerDesc::dense(6, 3)};
        check_gradients(spec, 22, 0);
    }
    SUBCASE("conv, pool, dense") {
        NetworkSpec spec;
        spec.input_shape = {2, 8, 8};
        spec.classes = 3;
        spec.layers = {LayerDesc::conv(2, 3, 3), LayerDesc::tanh(),   LayerDesc::maxpool(2),
                       LayerDesc::flatten(),     LayerDesc::dense(27, 3)};
        check_gradients(spec, 23, 1);
    }
    SUBCASE("lenet-like") { check_gradients(make_lenet_like(1, 16, 3), 24, 2); }
}

TEST_CASE("softmax, cross-entropy and argmax") {
    const Vec logits{1.0, 3.0, 3.0, -2.0};
    const Vec p = softmax(logits);
    double sum = 0;
    for (double v : p) sum += v;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(cross_entropy(logits, 1) == doctest::Approx(-std::log(p[1])).epsilon(1e-13));
    CHECK(argmax(logits) == 1);
    CHECK(std::isfinite(cross_entropy(Vec{1000.0, -1000.0}, 1)));
    CHECK(cross_entropy(Vec{1000.0, -1000.0}, 1) == doctest::Approx(2000.0));
}

TEST_CASE("parameter layout and names") {
    const NetworkSpec spec = make_mlp(4, {3}, 2);
    const ParamSet p = zero_params(spec);
    REQUIRE(p.size() == 4);
    CHECK(p[0].name == "layer0.weight");
    CHECK(p[0].shape == std::vector<std::uint32_t>{3, 4});
    CHECK(p[1].name == "layer0.bias");
    CHECK(p[2].name == "layer2.weight");
    CHECK(p.parameter_count() == 3 * 4 + 3 + 2 * 3 + 2);

    const NetworkSpec lenet = make_lenet_like(1, 28, 10);
    const ParamSet lp = zero_params(lenet);
    CHECK(lp[0].shape == std::vector<std::uint32_t>{6, 1, 5, 5});
    CHECK(lenet.shapes().back() == Shape{10, 1, 1});
}

TEST_CASE("structural errors") {
    NetworkSpec bad;
    bad.input_shape = {4};
    bad.classes = 2;
    bad.layers = {LayerDesc::dense(5, 2)};
    CHECK_THROWS_AS(bad.validate(), StructuralError);
    bad.layers = {LayerDesc::dense(4, 3)};
    CHECK_THROWS_AS(bad.validate(), StructuralError);
    bad.layers = {LayerDesc::relu()};
    CHECK_THROWS_AS(bad.validate(), StructuralError);

    const NetworkSpec spec = make_mlp(4, {3}, 2);
    ParamSet p = zero_params(spec);
    p[0].values.pop_back();
    CHECK_THROWS_AS(check_params(spec, p), StructuralError);
    CHECK_THROWS_AS(check_params(spec, zero_params(make_mlp(4, {5}, 2))), StructuralError);
    CHECK_THROWS_AS(forward(spec, zero_params(spec), Vec(5, 0.0)), StructuralError);
}

TEST_CASE("He initialisation is seeded and leaves biases at zero") {
    const NetworkSpec spec = make_mlp(100, {50}, 2);
    RngStream a(9), b(9);
    const ParamSet p = init_params(spec, a);
    CHECK(p == init_params(spec, b));
    for (double v : p[1].values) CHECK(v == 0.0);
    double var = 0;
    for (double v : p[0].values) var += v * v;
    var /= p[0].values.size();
    CHECK(var == doctest::Approx(2.0 / 100).epsilon(0.1));
}

TEST_CASE("rounded_f32 and flat") {
    const NetworkSpec spec = make_mlp(2, {2}, 2);
    ParamSet p = random_params(spec, 1);
    const ParamSet r = p.rounded_f32();
    for (std::size_t t = 0; t < p.size(); ++t)
        for (std::size_t k = 0; k < p[t].values.size(); ++k)
            CHECK(r[t].values[k] == static_cast<double>(static_cast<float>(p[t].values[k])));
    CHECK(p.flat().size() == p.parameter_count());
    CHECK(p.same_layout(r));
}
