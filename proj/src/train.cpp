#include "mge/train.hpp"

#include "mge/errors.hpp"
#include "mge/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

namespace mge {

const char* optimizer_name(Optimizer o) noexcept { return o == Optimizer::sgd ? "sgd" : "adam"; }

Optimizer parse_optimizer(const std::string& name) {
    if (name == "sgd") return Optimizer::sgd;
    if (name == "adam") return Optimizer::adam;
    throw ConfigError("unknown optimizer '" + name + "'");
}

void TrainConfig::validate() const {
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw ConfigError("train.learning_rate must be >= 0");
    if (epochs < 1) throw ConfigError("train.epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
}

std::size_t count_correct(const NetworkSpec& spec, const ParamSet& params, const Dataset& data) {
    check_params(spec, params);
    if (data.dim() != spec.input_size()) throw StructuralError("dataset feature size does not match the network input");
    constexpr std::size_t chunk = 256;
    const std::size_t chunks = (data.size() + chunk - 1) / chunk;
    std::vector<std::size_t> partial(chunks, 0);
    parallel_for(chunks, [&](std::size_t c) {
        const std::size_t begin = c * chunk, end = std::min(data.size(), begin + chunk);
        std::span<const double> rows(data.features.data() + begin * data.dim(), (end - begin) * data.dim());
        const auto logits = forward_batch(spec, params, rows);
        for (std::size_t i = begin; i < end; ++i)
            if (argmax(logits[i - begin]) == data.labels[i]) ++partial[c];
    });
    return std::accumulate(partial.begin(), partial.end(), std::size_t{0});
}

double evaluate_accuracy(const NetworkSpec& spec, const ParamSet& params, const Dataset& data) {
    if (data.size() == 0) throw InvalidInputError("evaluate_accuracy: empty dataset");
    return static_cast<double>(count_correct(spec, params, data)) / static_cast<double>(data.size());
}

double mean_loss(const NetworkSpec& spec, const ParamSet& params, const Dataset& data) {
    const auto logits = forward_batch(spec, params, data.features);
    double s = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) s += cross_entropy(logits[i], data.labels[i]);
    return s / static_cast<double>(logits.size());
}

TrainResult train_from(const NetworkSpec& spec, ParamSet params, const Dataset& data, const TrainConfig& cfg) {
    cfg.validate();
    data.validate();
    check_params(spec, params);
    if (data.dim() != spec.input_size()) throw StructuralError("dataset feature size does not match the network input");

    const auto start = std::chrono::steady_clock::now();
    RngStream rng = RngStream(cfg.seed).child(1);

    TrainResult result;
    result.initial_loss = mean_loss(spec, params, data);

    // Adam state (unused for sgd).
    ParamSet m = params, v = params;
    for (auto* ps : {&m, &v})
        for (auto& t : ps->tensors()) std::fill(t.values.begin(), t.values.end(), 0.0);
    constexpr double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
    long step = 0;

    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    ParamSet grad = params;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng.engine());
        double epoch_loss = 0.0;
        for (std::size_t b = 0; b < order.size(); b += cfg.batch_size) {
            const std::size_t e = std::min(order.size(), b + cfg.batch_size);
            for (auto& t : grad.tensors()) std::fill(t.values.begin(), t.values.end(), 0.0);
            for (std::size_t i = b; i < e; ++i) {
                const auto g = backprop(spec, params, data.example(order[i]), data.labels[order[i]], false, true);
                epoch_loss += g.loss;
                for (std::size_t t = 0; t < grad.size(); ++t)
                    for (std::size_t k = 0; k < grad[t].values.size(); ++k) grad[t].values[k] += g.params[t].values[k];
            }
            if (!std::isfinite(epoch_loss)) throw TrainingDivergedError("training loss became non-finite", epoch);
            const double scale = 1.0 / static_cast<double>(e - b);
            ++step;
            const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
            const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
            for (std::size_t t = 0; t < params.size(); ++t) {
                auto& p = params[t].values;
                const auto& g = grad[t].values;
                if (cfg.optimizer == Optimizer::sgd) {
                    for (std::size_t k = 0; k < p.size(); ++k) p[k] -= cfg.learning_rate * g[k] * scale;
                } else {
                    auto& mt = m[t].values;
                    auto& vt = v[t].values;
                    for (std::size_t k = 0; k < p.size(); ++k) {
                        const double gk = g[k] * scale;
                        mt[k] = beta1 * mt[k] + (1.0 - beta1) * gk;
                        vt[k] = beta2 * vt[k] + (1.0 - beta2) * gk * gk;
                        p[k] -= cfg.learning_rate * (mt[k] / bc1) / (std::sqrt(vt[k] / bc2) + adam_eps);
                    }
                }
            }
        }
        const double loss = mean_loss(spec, params, data);
        if (!std::isfinite(loss)) throw TrainingDivergedError("training loss became non-finite", epoch);
        result.epoch_loss.push_back(loss);
    }
    result.params = std::move(params);
    result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

TrainResult train(const NetworkSpec& spec, const Dataset& data, const TrainConfig& cfg) {
    spec.validate();
    RngStream init_rng = RngStream(cfg.seed).child(0);
    return train_from(spec, init_params(spec, init_rng), data, cfg);
}

} // namespace mge
