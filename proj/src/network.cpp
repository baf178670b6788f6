#include "mge/network.hpp"

#include "mge/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mge {

const char* layer_kind_name(LayerKind kind) noexcept {
    switch (kind) {
    case LayerKind::dense: return "dense";
    case LayerKind::conv: return "conv";
    case LayerKind::maxpool: return "maxpool";
    case LayerKind::relu: return "relu";
    case LayerKind::tanh: return "tanh";
    case LayerKind::flatten: return "flatten";
    }
    return "?";
}

LayerKind parse_layer_kind(const std::string& name) {
    for (auto k : {LayerKind::dense, LayerKind::conv, LayerKind::maxpool, LayerKind::relu, LayerKind::tanh,
                   LayerKind::flatten}) {
        if (name == layer_kind_name(k)) return k;
    }
    throw ConfigError("unknown layer type '" + name + "'");
}

Shape NetworkSpec::input() const {
    if (input_shape.size() == 1) return {input_shape[0], 1, 1};
    if (input_shape.size() == 3) return {input_shape[0], input_shape[1], input_shape[2]};
    throw StructuralError("input shape must have rank 1 or 3");
}

std::vector<Shape> NetworkSpec::shapes() const {
    Shape cur = input();
    if (cur.size() == 0) throw StructuralError("input shape has a zero dimension");
    std::vector<Shape> out;
    out.reserve(layers.size());
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto& l = layers[i];
        const std::string at = "layer " + std::to_string(i) + " (" + layer_kind_name(l.kind) + "): ";
        switch (l.kind) {
        case LayerKind::dense:
            if (cur.h != 1 || cur.w != 1) throw StructuralError(at + "spatial input needs a flatten layer first");
            if (l.in != cur.c) throw StructuralError(at + "expects " + std::to_string(l.in) + " inputs, got " + std::to_string(cur.c));
            if (l.out == 0) throw StructuralError(at + "zero outputs");
            cur = {l.out, 1, 1};
            break;
        case LayerKind::conv:
            if (l.in != cur.c) throw StructuralError(at + "expects " + std::to_string(l.in) + " channels, got " + std::to_string(cur.c));
            if (l.k == 0 || l.k > cur.h || l.k > cur.w) throw StructuralError(at + "kernel does not fit the input");
            if (l.out == 0) throw StructuralError(at + "zero output channels");
            cur = {l.out, cur.h - l.k + 1, cur.w - l.k + 1};
            break;
        case LayerKind::maxpool:
            if (l.k == 0 || l.k > cur.h || l.k > cur.w) throw StructuralError(at + "pool window does not fit the input");
            cur = {cur.c, cur.h / l.k, cur.w / l.k};
            break;
        case LayerKind::flatten:
            cur = {cur.size(), 1, 1};
            break;
        case LayerKind::relu:
        case LayerKind::tanh:
            break;
        }
        out.push_back(cur);
    }
    return out;
}

void NetworkSpec::validate() const {
    if (classes < 2) throw StructuralError("class count must be >= 2");
    if (layers.empty()) throw StructuralError("network has no layers");
    if (std::none_of(layers.begin(), layers.end(), [](const LayerDesc& l) { return l.has_params(); }))
        throw StructuralError("network has no parameterized layer");
    const auto s = shapes();
    if (s.back().size() != classes || s.back().h != 1 || s.back().w != 1)
        throw StructuralError("final layer emits " + std::to_string(s.back().size()) + " values for " +
                              std::to_string(classes) + " classes");
}

NetworkSpec make_mlp(std::size_t in, const std::vector<std::size_t>& hidden, std::size_t classes) {
    NetworkSpec spec;
    spec.input_shape = {in};
    spec.classes = classes;
    std::size_t prev = in;
    for (auto h : hidden) {
        spec.layers.push_back(LayerDesc::dense(prev, h));
        spec.layers.push_back(LayerDesc::relu());
        prev = h;
    }
    spec.layers.push_back(LayerDesc::dense(prev, classes));
    spec.validate();
    return spec;
}

NetworkSpec make_lenet_like(std::size_t channels, std::size_t side, std::size_t classes) {
    NetworkSpec spec;
    spec.input_shape = {channels, side, side};
    spec.classes = classes;
    spec.layers = {LayerDesc::conv(channels, 6, 5), LayerDesc::relu(), LayerDesc::maxpool(2),
                   LayerDesc::conv(6, 16, 5),       LayerDesc::relu(), LayerDesc::maxpool(2),
                   LayerDesc::flatten()};
    const auto flat = spec.shapes().back().size();
    spec.layers.push_back(LayerDesc::dense(flat, 120));
    spec.layers.push_back(LayerDesc::relu());
    spec.layers.push_back(LayerDesc::dense(120, classes));
    spec.validate();
    return spec;
}

std::size_t ParamSet::parameter_count() const {
    std::size_t n = 0;
    for (const auto& t : tensors_) n += t.values.size();
    return n;
}

ParamSet ParamSet::rounded_f32() const {
    ParamSet out = *this;
    for (auto& t : out.tensors_)
        for (auto& v : t.values) v = static_cast<double>(static_cast<float>(v));
    return out;
}

Vec ParamSet::flat() const {
    Vec out;
    out.reserve(parameter_count());
    for (const auto& t : tensors_) out.insert(out.end(), t.values.begin(), t.values.end());
    return out;
}

bool ParamSet::same_layout(const ParamSet& other) const {
    if (size() != other.size()) return false;
    for (std::size_t i = 0; i < size(); ++i) {
        if (tensors_[i].name != other.tensors_[i].name || tensors_[i].shape != other.tensors_[i].shape ||
            tensors_[i].values.size() != other.tensors_[i].values.size())
            return false;
    }
    return true;
}

namespace {

std::vector<ParamTensor> layout(const NetworkSpec& spec, bool with_values = true) {
    spec.validate();
    std::vector<ParamTensor> out;
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const auto& l = spec.layers[i];
        const std::string base = "layer" + std::to_string(i);
        if (l.kind == LayerKind::dense) {
            out.push_back({base + ".weight", {static_cast<std::uint32_t>(l.out), static_cast<std::uint32_t>(l.in)}, Vec(with_values ? l.out * l.in : 0, 0.0)});
            out.push_back({base + ".bias", {static_cast<std::uint32_t>(l.out)}, Vec(with_values ? l.out : 0, 0.0)});
        } else if (l.kind == LayerKind::conv) {
            const auto o = static_cast<std::uint32_t>(l.out), c = static_cast<std::uint32_t>(l.in), k = static_cast<std::uint32_t>(l.k);
            out.push_back({base + ".weight", {o, c, k, k}, Vec(with_values ? l.out * l.in * l.k * l.k : 0, 0.0)});
            out.push_back({base + ".bias", {o}, Vec(with_values ? l.out : 0, 0.0)});
        }
    }
    return out;
}

// Forward cache: activations[i] is the input to layer i, activations.back() the logits.
struct Trace {
    std::vector<Vec> acts;
    std::vector<std::vector<std::size_t>> pool_argmax;
};

void dense_forward(const LayerDesc& l, const Vec& w, const Vec& b, const Vec& x, Vec& y) {
    y.assign(l.out, 0.0);
    for (std::size_t o = 0; o < l.out; ++o) {
        const double* row = w.data() + o * l.in;
        double s = b[o];
        for (std::size_t i = 0; i < l.in; ++i) s += row[i] * x[i];
        y[o] = s;
    }
}

void conv_forward(const LayerDesc& l, const Shape& in, const Shape& out, const Vec& w, const Vec& b, const Vec& x,
                  Vec& y) {
    y.assign(out.size(), 0.0);
    const std::size_t k = l.k;
    for (std::size_t o = 0; o < out.c; ++o) {
        for (std::size_t r = 0; r < out.h; ++r) {
            for (std::size_t c = 0; c < out.w; ++c) {
                double s = b[o];
                for (std::size_t ic = 0; ic < in.c; ++ic) {
                    const double* wk = w.data() + ((o * in.c + ic) * k) * k;
                    const double* xi = x.data() + ic * in.h * in.w;
                    for (std::size_t u = 0; u < k; ++u)
                        for (std::size_t v = 0; v < k; ++v) s += wk[u * k + v] * xi[(r + u) * in.w + (c + v)];
                }
                y[(o * out.h + r) * out.w + c] = s;
            }
        }
    }
}

void pool_forward(const LayerDesc& l, const Shape& in, const Shape& out, const Vec& x, Vec& y,
                  std::vector<std::size_t>& arg) {
    y.assign(out.size(), 0.0);
    arg.assign(out.size(), 0);
    for (std::size_t ch = 0; ch < out.c; ++ch)
        for (std::size_t r = 0; r < out.h; ++r)
            for (std::size_t c = 0; c < out.w; ++c) {
                double best = -std::numeric_limits<double>::infinity();
                std::size_t best_i = 0;
                for (std::size_t u = 0; u < l.k; ++u)
                    for (std::size_t v = 0; v < l.k; ++v) {
                        const std::size_t idx = (ch * in.h + r * l.k + u) * in.w + c * l.k + v;
                        if (x[idx] > best) {
                            best = x[idx];
                            best_i = idx;
                        }
                    }
                const std::size_t o = (ch * out.h + r) * out.w + c;
                y[o] = best;
                arg[o] = best_i;
            }
}

Trace run_forward(const NetworkSpec& spec, const std::vector<Shape>& shapes, const ParamSet& params,
                  std::span<const double> x) {
    Trace t;
    t.acts.reserve(spec.layers.size() + 1);
    t.acts.emplace_back(x.begin(), x.end());
    t.pool_argmax.resize(spec.layers.size());
    std::size_t p = 0;
    Shape in = spec.input();
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const auto& l = spec.layers[i];
        const Vec& a = t.acts.back();
        Vec y;
        switch (l.kind) {
        case LayerKind::dense:
            dense_forward(l, params[p].values, params[p + 1].values, a, y);
            p += 2;
            break;
        case LayerKind::conv:
            conv_forward(l, in, shapes[i], params[p].values, params[p + 1].values, a, y);
            p += 2;
            break;
        case LayerKind::maxpool:
            pool_forward(l, in, shapes[i], a, y, t.pool_argmax[i]);
            break;
        case LayerKind::relu:
            y = a;
            for (auto& v : y) v = v > 0.0 ? v : 0.0;
            break;
        case LayerKind::tanh:
            y = a;
            for (auto& v : y) v = std::tanh(v);
            break;
        case LayerKind::flatten:
            y = a;
            break;
        }
        t.acts.push_back(std::move(y));
        in = shapes[i];
    }
    return t;
}

} // namespace

ParamSet zero_params(const NetworkSpec& spec) { return ParamSet(layout(spec)); }

ParamSet init_params(const NetworkSpec& spec, RngStream& rng) {
    auto tensors = layout(spec);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (auto& t : tensors) {
        if (t.shape.size() < 2) continue; // biases stay zero
        std::size_t fan_in = 1;
        for (std::size_t d = 1; d < t.shape.size(); ++d) fan_in *= t.shape[d];
        const double sd = std::sqrt(2.0 / static_cast<double>(fan_in));
        for (auto& v : t.values) v = sd * normal(rng.engine());
    }
    return ParamSet(std::move(tensors));
}

void check_params(const NetworkSpec& spec, const ParamSet& params) {
    const auto expected = layout(spec, false);
    bool ok = expected.size() == params.size();
    for (std::size_t i = 0; ok && i < expected.size(); ++i) {
        std::size_t n = 1;
        for (auto d : expected[i].shape) n *= d;
        ok = expected[i].name == params[i].name && expected[i].shape == params[i].shape && params[i].values.size() == n;
    }
    if (!ok)
        throw StructuralError("parameter set does not match the network layout (" + std::to_string(params.size()) +
                              " tensors, expected " + std::to_string(expected.size()) + ")");
}

Vec forward(const NetworkSpec& spec, const ParamSet& params, std::span<const double> x) {
    check_params(spec, params);
    if (x.size() != spec.input_size())
        throw StructuralError("input has " + std::to_string(x.size()) + " features, network expects " +
                              std::to_string(spec.input_size()));
    return run_forward(spec, spec.shapes(), params, x).acts.back();
}

std::vector<Vec> forward_batch(const NetworkSpec& spec, const ParamSet& params, std::span<const double> batch) {
    check_params(spec, params);
    const auto shapes = spec.shapes();
    const std::size_t d = spec.input_size();
    if (batch.size() % d != 0) throw StructuralError("batch size is not a multiple of the input size");
    std::vector<Vec> out;
    out.reserve(batch.size() / d);
    for (std::size_t off = 0; off < batch.size(); off += d)
        out.push_back(run_forward(spec, shapes, params, batch.subspan(off, d)).acts.back());
    return out;
}

double cross_entropy(std::span<const double> logits, int label) {
    const double mx = *std::max_element(logits.begin(), logits.end());
    double s = 0.0;
    for (double v : logits) s += std::exp(v - mx);
    return std::log(s) + mx - logits[static_cast<std::size_t>(label)];
}

Vec softmax(std::span<const double> logits) {
    const double mx = *std::max_element(logits.begin(), logits.end());
    Vec p(logits.size());
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) s += p[i] = std::exp(logits[i] - mx);
    for (auto& v : p) v /= s;
    return p;
}

int argmax(std::span<const double> logits) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < logits.size(); ++i)
        if (logits[i] > logits[best]) best = i;
    return static_cast<int>(best);
}

Gradients backprop(const NetworkSpec& spec, const ParamSet& params, std::span<const double> x, int label,
                   bool want_input, bool want_params) {
    check_params(spec, params);
    if (x.size() != spec.input_size()) throw StructuralError("input size mismatch in backprop");
    if (label < 0 || static_cast<std::size_t>(label) >= spec.classes) throw InvalidInputError("label out of range");
    const auto shapes = spec.shapes();
    const Trace t = run_forward(spec, shapes, params, x);

    Gradients g;
    g.loss = cross_entropy(t.acts.back(), label);
    if (want_params) {
        g.params = params;
        for (auto& tensor : g.params.tensors()) std::fill(tensor.values.begin(), tensor.values.end(), 0.0);
    }

    Vec delta = softmax(t.acts.back());
    delta[static_cast<std::size_t>(label)] -= 1.0;

    std::size_t p = params.size();
    for (std::size_t ii = spec.layers.size(); ii-- > 0;) {
        const auto& l = spec.layers[ii];
        const Vec& a = t.acts[ii];
        const Shape in = ii == 0 ? spec.input() : shapes[ii - 1];
        const Shape out = shapes[ii];
        // Skip computing the input delta of the first layer when nobody needs it.
        const bool need_prev = ii > 0 || want_input;
        Vec prev;
        switch (l.kind) {
        case LayerKind::dense: {
            p -= 2;
            const Vec& w = params[p].values;
            if (want_params) {
                Vec& gw = g.params[p].values;
                Vec& gb = g.params[p + 1].values;
                for (std::size_t o = 0; o < l.out; ++o) {
                    gb[o] += delta[o];
                    double* row = gw.data() + o * l.in;
                    for (std::size_t i = 0; i < l.in; ++i) row[i] += delta[o] * a[i];
                }
            }
            if (need_prev) {
                prev.assign(l.in, 0.0);
                for (std::size_t o = 0; o < l.out; ++o) {
                    const double* row = w.data() + o * l.in;
                    for (std::size_t i = 0; i < l.in; ++i) prev[i] += row[i] * delta[o];
                }
            }
            break;
        }
        case LayerKind::conv: {
            p -= 2;
            const Vec& w = params[p].values;
            const std::size_t k = l.k;
            if (need_prev) prev.assign(in.size(), 0.0);
            for (std::size_t o = 0; o < out.c; ++o) {
                for (std::size_t r = 0; r < out.h; ++r) {
                    for (std::size_t c = 0; c < out.w; ++c) {
                        const double d = delta[(o * out.h + r) * out.w + c];
                        if (d == 0.0) continue;
                        if (want_params) g.params[p + 1].values[o] += d;
                        for (std::size_t ic = 0; ic < in.c; ++ic) {
                            const std::size_t wbase = ((o * in.c + ic) * k) * k;
                            const std::size_t xbase = ic * in.h * in.w;
                            for (std::size_t u = 0; u < k; ++u)
                                for (std::size_t v = 0; v < k; ++v) {
                                    const std::size_t xi = xbase + (r + u) * in.w + (c + v);
                                    if (want_params) g.params[p].values[wbase + u * k + v] += d * a[xi];
                                    if (need_prev) prev[xi] += d * w[wbase + u * k + v];
                                }
                        }
                    }
                }
            }
            break;
        }
        case LayerKind::maxpool:
            prev.assign(in.size(), 0.0);
            for (std::size_t o = 0; o < delta.size(); ++o) prev[t.pool_argmax[ii][o]] += delta[o];
            break;
        case LayerKind::relu:
            prev = delta;
            for (std::size_t i = 0; i < prev.size(); ++i)
                if (!(a[i] > 0.0)) prev[i] = 0.0;
            break;
        case LayerKind::tanh:
            prev = delta;
            for (std::size_t i = 0; i < prev.size(); ++i) {
                const double y = t.acts[ii + 1][i];
                prev[i] *= 1.0 - y * y;
            }
            break;
        case LayerKind::flatten:
            prev = delta;
            break;
        }
        delta = std::move(prev);
    }
    if (want_input) g.input = std::move(delta);
    return g;
}

Vec input_gradient(const NetworkSpec& spec, const ParamSet& params, std::span<const double> x, int label) {
    return backprop(spec, params, x, label, true, false).input;
}

} // namespace mge
