#pragma once

// Evolutionary enhancement of a generated pool. Each generation mutates the
// surviving parents (fresh draws for their unimportant coefficients), fuses
// random pairs by weighted parameter averaging, scores everyone with
// F = F_q + gamma * F_d and keeps the n best.

#include "mge/fitness.hpp"
#include "mge/generator.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace mge {

enum class FusionWeights { uniform, fitness };

const char* fusion_weights_name(FusionWeights w) noexcept;
FusionWeights parse_fusion_weights(const std::string& name);

struct EvolutionConfig {
    int generations = 100;      // N
    std::size_t parents = 10;   // n, survivors per generation
    std::size_t mutations = 10; // j, children per generation (round-robin over parents)
    std::size_t fusions = 20;   // m, fused candidates per generation
    FusionWeights weights = FusionWeights::uniform;
    std::uint64_t seed = 0;

    void validate() const;
};

struct Member {
    Candidate candidate;
    double quality = 0.0;   // F_q
    double diversity = 0.0; // F_d
    double fitness = 0.0;   // F
    int born = 0;           // generation index
};

struct Population {
    int generation = 0;
    std::vector<Member> members;
};

struct GenerationRecord {
    int generation = 0;
    double max_fitness = 0.0;
    double mean_fitness = 0.0; // over survivors
    std::uint64_t best_id = 0;
    std::size_t survivors = 0; // population size after selection
    std::size_t offspring = 0; // mutated + fused candidates that passed acceptance
    std::size_t discarded = 0; // candidates rejected by the acceptance predicate
};

struct EvolutionResult {
    Member best;
    std::vector<GenerationRecord> history;
    Population seed;  // generation 0 after evaluation
    Population final;
    double seconds = 0.0;

    /// "generation,max_fitness,mean_fitness,best_id,survivors,offspring,discarded" records.
    std::string history_csv() const;
};

/// j children of `parent`, each from its own child stream of `rng`. Children
/// keep the parent's retained coefficients and redraw the rest at z.
std::vector<Candidate> mutate(const Generator& gen, const Candidate& parent, std::size_t j, const RngStream& rng);

/// Elementwise weighted average. Weights must be non-negative and sum to 1
/// within 1e-9 (ConfigError); every model must share one layout (StructuralError).
ParamSet fuse(std::span<const ParamSet> models, std::span<const double> weights);

/// Scores every member: F_q, F_d and F.
void evaluate_population(const NetworkSpec& spec, Population& pop, const FitnessConfig& fit);

/// The n best members by F, then higher F_q, then lower candidate id.
std::vector<Member> select(const Population& pop, std::size_t n);

/// Full loop: seed pool of n accepted candidates, then N generations.
EvolutionResult evolve(const Generator& gen, const EvolutionConfig& ecfg, const FitnessConfig& fit);

} // namespace mge
