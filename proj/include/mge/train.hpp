#pragma once

#include "mge/dataset.hpp"
#include "mge/network.hpp"

#include <cstdint>
#include <string>

namespace mge {

enum class Optimizer { sgd, adam };

const char* optimizer_name(Optimizer o) noexcept;
Optimizer parse_optimizer(const std::string& name);

struct TrainConfig {
    Optimizer optimizer = Optimizer::adam;
    double learning_rate = 0.001;
    int epochs = 10;
    std::size_t batch_size = 32;
    std::uint64_t seed = 0;

    /// learning_rate >= 0 (zero is a valid no-op), epochs >= 1, batch_size >= 1.
    void validate() const;
};

struct TrainResult {
    ParamSet params;
    double seconds = 0.0;      // wall-clock, excludes dataset loading
    double initial_loss = 0.0; // mean loss of the initial parameters
    Vec epoch_loss;            // mean loss after each epoch
};

/// Mini-batch training with softmax cross-entropy from He-initialised
/// weights (seeded by cfg.seed). Throws TrainingDivergedError if the loss
/// stops being finite.
TrainResult train(const NetworkSpec& spec, const Dataset& data, const TrainConfig& cfg);

/// Same, continuing from `init` instead of a fresh initialisation.
TrainResult train_from(const NetworkSpec& spec, ParamSet init, const Dataset& data, const TrainConfig& cfg);

/// Fraction of examples whose argmax logit (lowest index on ties) matches the label.
double evaluate_accuracy(const NetworkSpec& spec, const ParamSet& params, const Dataset& data);

/// Number of correctly classified examples.
std::size_t count_correct(const NetworkSpec& spec, const ParamSet& params, const Dataset& data);

double mean_loss(const NetworkSpec& spec, const ParamSet& params, const Dataset& data);

} // namespace mge
