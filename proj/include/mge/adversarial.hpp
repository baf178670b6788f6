#pragma once

#include "mge/dataset.hpp"
#include "mge/network.hpp"

#include <optional>
#include <string>
#include <vector>

namespace mge {

struct AdvExample {
    Vec original;
    Vec perturbed;
    int label = 0;
    std::optional<int> target;
    std::string source_id;
    double epsilon = 0.0;
};

/// x' = clip(x + eps * sign(grad_x loss(x, label)), 0, 1) with sign(0) = 0.
/// eps = 0 returns the input unchanged.
AdvExample fgsm(const NetworkSpec& spec, const ParamSet& params, std::span<const double> x, int label, double eps);

/// Targeted variant: steps against the gradient of the loss toward `target`.
AdvExample fgsm_targeted(const NetworkSpec& spec, const ParamSet& params, std::span<const double> x, int label,
                         int target, double eps);

/// White-box accuracy on FGSM examples crafted against the model itself.
double robust_accuracy(const NetworkSpec& spec, const ParamSet& params, const Dataset& data, double eps);

struct TransferRow {
    std::string id;
    double clean = 0.0;
    double untargeted = 0.0;              // misclassified as anything but the true label
    std::optional<double> targeted;       // classified exactly as the designated target
    std::size_t examples = 0;
    std::size_t untargeted_hits = 0;
};

struct TransferReport {
    std::string source_id;
    double epsilon = 0.0;
    std::vector<TransferRow> rows;

    /// One record per model: "id,clean,untargeted,targeted" (targeted empty when unset).
    std::string to_csv() const;
};

struct PoolMember {
    std::string id;
    ParamSet params;
};

/// Default target rule: (label + 1) mod classes.
std::vector<int> default_targets(const Dataset& data);

/// Crafts FGSM examples against `source` on every example of `sample` and
/// scores each pool member on them. With `targets`, targeted examples are
/// crafted separately toward those labels and scored for exact hits.
TransferReport transfer_matrix(const NetworkSpec& spec, const PoolMember& source, const std::vector<PoolMember>& pool,
                               const Dataset& sample, double eps,
                               const std::optional<std::vector<int>>& targets = std::nullopt);

} // namespace mge
