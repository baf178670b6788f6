#include "mge/fitness.hpp"

#include "mge/adversarial.hpp"
#include "mge/errors.hpp"
#include "mge/train.hpp"

#include <cmath>

namespace mge {

const char* criterion_kind_name(CriterionKind k) noexcept {
    switch (k) {
    case CriterionKind::accuracy: return "accuracy";
    case CriterionKind::robust_accuracy: return "robust_accuracy";
    case CriterionKind::transfer_accuracy: return "transfer_accuracy";
    }
    return "?";
}

CriterionKind parse_criterion_kind(const std::string& name) {
    for (auto k : {CriterionKind::accuracy, CriterionKind::robust_accuracy, CriterionKind::transfer_accuracy})
        if (name == criterion_kind_name(k)) return k;
    throw ConfigError("unknown criterion '" + name + "'");
}

Criterion::Criterion(CriterionKind kind, Dataset data, double eps)
    : kind_(kind), data_(std::make_shared<const Dataset>(std::move(data))), eps_(eps) {
    data_->validate();
}

Criterion Criterion::accuracy(Dataset data) { return {CriterionKind::accuracy, std::move(data), 0.0}; }

Criterion Criterion::robust_accuracy(Dataset data, double attack_eps) {
    if (!(attack_eps > 0.0) || !std::isfinite(attack_eps))
        throw ConfigError("robust_accuracy criterion needs an attack strength > 0");
    return {CriterionKind::robust_accuracy, std::move(data), attack_eps};
}

Criterion Criterion::transfer_accuracy(Dataset alternate) {
    return {CriterionKind::transfer_accuracy, std::move(alternate), 0.0};
}

double Criterion::score(const NetworkSpec& spec, const ParamSet& params) const {
    const ParamSet stored = params.rounded_f32();
    switch (kind_) {
    case CriterionKind::accuracy:
    case CriterionKind::transfer_accuracy:
        return evaluate_accuracy(spec, stored, *data_);
    case CriterionKind::robust_accuracy:
        return mge::robust_accuracy(spec, stored, *data_, eps_);
    }
    return 0.0;
}

void FitnessConfig::validate() const {
    if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw ConfigError("fitness.gamma must be >= 0");
}

namespace {

double mean_score(const NetworkSpec& spec, std::span<const Candidate> candidates, const Criterion& c) {
    if (candidates.empty()) throw InvalidInputError("fitness of an empty candidate set");
    double sum = 0.0;
    for (const auto& cand : candidates) sum += c.score(spec, cand.params);
    return sum / static_cast<double>(candidates.size());
}

} // namespace

double quality_fitness(const NetworkSpec& spec, std::span<const Candidate> candidates, const Criterion& base) {
    return mean_score(spec, candidates, base);
}

double diversity_fitness(const NetworkSpec& spec, std::span<const Candidate> candidates, const Criterion& additional) {
    return mean_score(spec, candidates, additional);
}

double combined_fitness(double quality, double diversity, double gamma) {
    if (!(gamma >= 0.0)) throw ConfigError("gamma must be >= 0");
    return quality + gamma * diversity;
}

} // namespace mge
