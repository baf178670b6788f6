#include "mge/evolution.hpp"

#include "mge/errors.hpp"
#include "mge/parallel.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace mge {

const char* fusion_weights_name(FusionWeights w) noexcept { return w == FusionWeights::uniform ? "uniform" : "fitness"; }

FusionWeights parse_fusion_weights(const std::string& name) {
    if (name == "uniform") return FusionWeights::uniform;
    if (name == "fitness") return FusionWeights::fitness;
    throw ConfigError("unknown fusion weight rule '" + name + "'");
}

void EvolutionConfig::validate() const {
    if (generations < 0) throw ConfigError("evolution.generations must be >= 0");
    if (parents < 1) throw ConfigError("evolution.parents must be >= 1");
    if (mutations < 1) throw ConfigError("evolution.mutations must be >= 1");
    if (fusions < 1) throw ConfigError("evolution.fusions must be >= 1");
}

std::vector<Candidate> mutate(const Generator& gen, const Candidate& parent, std::size_t j, const RngStream& rng) {
    if (j < 1) throw ConfigError("mutation count must be >= 1");
    std::vector<Candidate> children(j);
    parallel_for(j, [&](std::size_t k) {
        children[k] = gen.resample(parent.params, rng.child(k), gen.config().z);
        children[k].lineage = {"mutate", {parent.id}};
    });
    return children;
}

ParamSet fuse(std::span<const ParamSet> models, std::span<const double> weights) {
    if (models.empty()) throw ConfigError("fusion needs at least one model");
    if (models.size() != weights.size()) throw ConfigError("fusion needs one weight per model");
    double total = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0)) throw ConfigError("fusion weights must be non-negative");
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-9) throw ConfigError("fusion weights must sum to 1");
    for (const auto& m : models)
        if (!m.same_layout(models[0])) throw StructuralError("fusion parents do not share an architecture");

    ParamSet out = models[0];
    for (std::size_t t = 0; t < out.size(); ++t) {
        auto& dst = out[t].values;
        for (std::size_t k = 0; k < dst.size(); ++k) {
            double s = 0.0;
            for (std::size_t i = 0; i < models.size(); ++i) s += weights[i] * models[i][t].values[k];
            dst[k] = s;
        }
    }
    return out;
}

namespace {

void score(const NetworkSpec& spec, Member& m, const FitnessConfig& fit) {
    const std::span<const Candidate> one(&m.candidate, 1);
    m.quality = quality_fitness(spec, one, fit.base);
    m.diversity = diversity_fitness(spec, one, fit.additional);
    m.fitness = combined_fitness(m.quality, m.diversity, fit.gamma);
}

bool ranks_before(const Member& a, const Member& b) {
    if (a.fitness != b.fitness) return a.fitness > b.fitness;
    if (a.quality != b.quality) return a.quality > b.quality;
    return a.candidate.id < b.candidate.id;
}

GenerationRecord summarize(int generation, const std::vector<Member>& survivors) {
    GenerationRecord r;
    r.generation = generation;
    double sum = 0.0;
    for (const auto& m : survivors) sum += m.fitness;
    r.mean_fitness = sum / static_cast<double>(survivors.size());
    r.max_fitness = survivors.front().fitness;
    r.best_id = survivors.front().candidate.id;
    r.survivors = survivors.size();
    return r;
}

} // namespace

void evaluate_population(const NetworkSpec& spec, Population& pop, const FitnessConfig& fit) {
    fit.validate();
    parallel_for(pop.members.size(), [&](std::size_t i) { score(spec, pop.members[i], fit); });
}

std::vector<Member> select(const Population& pop, std::size_t n) {
    if (pop.members.size() < n)
        throw StructuralError("population of " + std::to_string(pop.members.size()) + " cannot yield " +
                              std::to_string(n) + " survivors");
    std::vector<Member> sorted = pop.members;
    std::stable_sort(sorted.begin(), sorted.end(), ranks_before);
    sorted.resize(n);
    return sorted;
}

EvolutionResult evolve(const Generator& gen, const EvolutionConfig& ecfg, const FitnessConfig& fit) {
    ecfg.validate();
    fit.validate();
    const auto start = std::chrono::steady_clock::now();
    const auto& spec = gen.spec();
    const RngStream root = RngStream(ecfg.seed).child(0xe70);
    std::uint64_t next_id = 0;

    EvolutionResult result;
    PoolResult seed_pool = gen.pool(ecfg.parents);
    Population pop;
    for (auto& c : seed_pool.accepted) {
        c.id = next_id++;
        c.lineage = {"seed", {}};
        pop.members.push_back({std::move(c), 0.0, 0.0, 0.0, 0});
    }
    evaluate_population(spec, pop, fit);
    pop.members = select(pop, std::min(ecfg.parents, pop.members.size()));
    result.seed = pop;
    result.history.push_back(summarize(0, pop.members));

    for (int g = 1; g <= ecfg.generations; ++g) {
        const RngStream gen_rng = root.child(static_cast<std::uint64_t>(g));
        const std::size_t n_parents = pop.members.size();

        // Mutation: j children, round-robin over parents in rank order.
        std::vector<Member> children(ecfg.mutations);
        parallel_for(ecfg.mutations, [&](std::size_t k) {
            const Candidate& parent = pop.members[k % n_parents].candidate;
            Candidate child = gen.resample(parent.params, gen_rng.child({0, k}), gen.config().z);
            child.lineage = {"mutate", {parent.id}};
            children[k].candidate = std::move(child);
            children[k].born = g;
            if (children[k].candidate.accepted) score(spec, children[k], fit);
        });

        std::vector<const Member*> fusable;
        for (const auto& m : pop.members) fusable.push_back(&m);
        std::size_t discarded = 0;
        for (auto& c : children) {
            if (c.candidate.accepted) {
                c.candidate.id = next_id++;
                fusable.push_back(&c);
            } else {
                ++discarded;
            }
        }

        // Fusion: m weighted pairs drawn from parents and surviving children.
        std::vector<Member> fused(fusable.size() >= 2 ? ecfg.fusions : 0);
        parallel_for(fused.size(), [&](std::size_t q) {
            RngStream pick = gen_rng.child({1, q});
            const std::size_t a = pick.below(fusable.size());
            std::size_t b = pick.below(fusable.size() - 1);
            if (b >= a) ++b;
            const Member& pa = *fusable[a];
            const Member& pb = *fusable[b];
            double wa = 0.5;
            if (ecfg.weights == FusionWeights::fitness && pa.fitness + pb.fitness > 0.0)
                wa = pa.fitness / (pa.fitness + pb.fitness);
            const std::array<ParamSet, 2> models{pa.candidate.params, pb.candidate.params};
            const std::array<double, 2> weights{wa, 1.0 - wa};
            const auto t0 = std::chrono::steady_clock::now();
            Candidate c;
            c.params = fuse(models, weights);
            c.lineage = {"fuse", {pa.candidate.id, pb.candidate.id}};
            gen.judge(c);
            c.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            fused[q].candidate = std::move(c);
            fused[q].born = g;
            if (fused[q].candidate.accepted) score(spec, fused[q], fit);
        });

        Population next;
        next.generation = g;
        next.members = pop.members;
        std::size_t offspring = 0;
        for (auto& m : children) {
            if (!m.candidate.accepted) continue;
            next.members.push_back(std::move(m));
            ++offspring;
        }
        for (auto& m : fused) {
            if (!m.candidate.accepted) {
                ++discarded;
                continue;
            }
            m.candidate.id = next_id++;
            next.members.push_back(std::move(m));
            ++offspring;
        }
        pop.generation = g;
        pop.members = select(next, std::min(ecfg.parents, next.members.size()));
        auto rec = summarize(g, pop.members);
        rec.offspring = offspring;
        rec.discarded = discarded;
        result.history.push_back(rec);
    }

    result.final = pop;
    result.best = pop.members.front();
    result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

std::string EvolutionResult::history_csv() const {
    std::ostringstream out;
    out << "generation,max_fitness,mean_fitness,best_id,survivors,offspring,discarded\n";
    char buf[64];
    for (const auto& r : history) {
        out << r.generation << ',';
        std::snprintf(buf, sizeof buf, "%.9f,%.9f", r.max_fitness, r.mean_fitness);
        out << buf << ',' << r.best_id << ',' << r.survivors << ',' << r.offspring << ',' << r.discarded << '\n';
    }
    return out.str();
}

} // namespace mge
