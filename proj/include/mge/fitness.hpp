#pragma once

#include "mge/dataset.hpp"
#include "mge/generator.hpp"
#include "mge/network.hpp"

#include <memory>
#include <span>
#include <string>

namespace mge {

enum class CriterionKind { accuracy, robust_accuracy, transfer_accuracy };

const char* criterion_kind_name(CriterionKind k) noexcept;
CriterionKind parse_criterion_kind(const std::string& name);

/// A scoring rule in [0, 1] evaluated on a dataset. robust_accuracy attacks
/// each model with FGSM at `attack_eps`; transfer_accuracy is plain accuracy
/// on an alternate dataset.
class Criterion {
public:
    static Criterion accuracy(Dataset data);
    static Criterion robust_accuracy(Dataset data, double attack_eps);
    static Criterion transfer_accuracy(Dataset alternate);

    CriterionKind kind() const noexcept { return kind_; }
    double attack_eps() const noexcept { return eps_; }
    const Dataset& dataset() const noexcept { return *data_; }

    /// Score at storage precision (float32-rounded parameters).
    double score(const NetworkSpec& spec, const ParamSet& params) const;

private:
    Criterion(CriterionKind kind, Dataset data, double eps);

    CriterionKind kind_;
    std::shared_ptr<const Dataset> data_;
    double eps_ = 0.0;
};

struct FitnessConfig {
    Criterion base;
    Criterion additional;
    double gamma = 1.0;

    void validate() const;
};

/// Mean D_base score over the candidates.
double quality_fitness(const NetworkSpec& spec, std::span<const Candidate> candidates, const Criterion& base);

/// Mean D_add score over the candidates.
double diversity_fitness(const NetworkSpec& spec, std::span<const Candidate> candidates, const Criterion& additional);

/// F = F_q + gamma * F_d.
double combined_fitness(double quality, double diversity, double gamma);

} // namespace mge
