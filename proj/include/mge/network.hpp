#pragma once

#include "mge/tensor.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace mge {

enum class LayerKind { dense, conv, maxpool, relu, tanh, flatten };

const char* layer_kind_name(LayerKind kind) noexcept;
LayerKind parse_layer_kind(const std::string& name);

/// One layer of a sequential classifier. Only the fields relevant to `kind`
/// are meaningful: dense uses (in, out), conv uses (in, out, k) as channel
/// counts and square kernel size, maxpool uses k.
struct LayerDesc {
    LayerKind kind = LayerKind::relu;
    std::size_t in = 0;
    std::size_t out = 0;
    std::size_t k = 0;

    bool has_params() const noexcept { return kind == LayerKind::dense || kind == LayerKind::conv; }

    static LayerDesc dense(std::size_t in, std::size_t out) { return {LayerKind::dense, in, out, 0}; }
    static LayerDesc conv(std::size_t in_ch, std::size_t out_ch, std::size_t k) { return {LayerKind::conv, in_ch, out_ch, k}; }
    static LayerDesc maxpool(std::size_t k) { return {LayerKind::maxpool, 0, 0, k}; }
    static LayerDesc relu() { return {LayerKind::relu, 0, 0, 0}; }
    static LayerDesc tanh() { return {LayerKind::tanh, 0, 0, 0}; }
    static LayerDesc flatten() { return {LayerKind::flatten, 0, 0, 0}; }

    bool operator==(const LayerDesc&) const = default;
};

/// Activation shape: channels x height x width. Flat vectors are {n, 1, 1}.
struct Shape {
    std::size_t c = 0, h = 1, w = 1;
    std::size_t size() const noexcept { return c * h * w; }
    bool operator==(const Shape&) const = default;
};

struct NetworkSpec {
    std::vector<LayerDesc> layers;
    std::vector<std::size_t> input_shape; // {d} or {c, h, w}
    std::size_t classes = 0;

    /// Throws StructuralError unless layer shapes compose, the last layer
    /// emits `classes` logits, classes >= 2 and at least one layer has params.
    void validate() const;

    Shape input() const;
    std::size_t input_size() const { return input().size(); }
    /// Shape after every layer, validated; result[i] is the output of layers[i].
    std::vector<Shape> shapes() const;

    bool operator==(const NetworkSpec&) const = default;
};

/// Dense MLP: in -> hidden... -> classes with ReLU between layers.
NetworkSpec make_mlp(std::size_t in, const std::vector<std::size_t>& hidden, std::size_t classes);

/// LeNet-like: conv5(6) relu pool2 conv5(16) relu pool2 flatten dense(120) relu dense(classes).
NetworkSpec make_lenet_like(std::size_t channels, std::size_t side, std::size_t classes);

struct ParamTensor {
    std::string name;
    std::vector<std::uint32_t> shape;
    Vec values;

    bool operator==(const ParamTensor&) const = default;
};

/// Per-layer flat parameter vectors. Weights and biases of a layer are
/// separate tensors ("layer<i>.weight", "layer<i>.bias") in layer order.
class ParamSet {
public:
    ParamSet() = default;
    explicit ParamSet(std::vector<ParamTensor> tensors) : tensors_(std::move(tensors)) {}

    std::size_t size() const noexcept { return tensors_.size(); }
    bool empty() const noexcept { return tensors_.empty(); }
    const ParamTensor& operator[](std::size_t i) const { return tensors_[i]; }
    ParamTensor& operator[](std::size_t i) { return tensors_[i]; }
    const std::vector<ParamTensor>& tensors() const noexcept { return tensors_; }
    std::vector<ParamTensor>& tensors() noexcept { return tensors_; }

    std::size_t parameter_count() const;
    /// Every value rounded to the nearest float32, the on-disk precision.
    ParamSet rounded_f32() const;
    /// All values concatenated in tensor order.
    Vec flat() const;
    bool same_layout(const ParamSet& other) const;

    bool operator==(const ParamSet&) const = default;

private:
    std::vector<ParamTensor> tensors_;
};

ParamSet zero_params(const NetworkSpec& spec);
/// He-normal weights, zero biases.
ParamSet init_params(const NetworkSpec& spec, RngStream& rng);
/// Throws StructuralError if `params` does not match the layout `spec` implies.
void check_params(const NetworkSpec& spec, const ParamSet& params);

/// Logits for one example. Deterministic.
Vec forward(const NetworkSpec& spec, const ParamSet& params, std::span<const double> x);

/// Logits for `count` examples stored contiguously in `batch`.
std::vector<Vec> forward_batch(const NetworkSpec& spec, const ParamSet& params, std::span<const double> batch);

/// Numerically stable softmax cross-entropy.
double cross_entropy(std::span<const double> logits, int label);
Vec softmax(std::span<const double> logits);
/// Lowest index wins ties.
int argmax(std::span<const double> logits);

struct Gradients {
    double loss = 0.0;
    Vec input;        // d loss / d x (filled when requested)
    ParamSet params;  // d loss / d params (filled when requested)
};

/// Cross-entropy loss of one example and its gradients. ReLU's subgradient at
/// zero is zero; max-pool routes to the first maximal element.
Gradients backprop(const NetworkSpec& spec, const ParamSet& params, std::span<const double> x, int label,
                   bool want_input, bool want_params);

/// Gradient of the cross-entropy loss with respect to the input features.
Vec input_gradient(const NetworkSpec& spec, const ParamSet& params, std::span<const double> x, int label);

} // namespace mge
