#pragma once

// JSON run configuration shared by the CLI and the tests. Unknown keys are
// rejected with the section and key named; every resolved default is echoed
// back by to_json().

#include "mge/dataset.hpp"
#include "mge/evolution.hpp"
#include "mge/fitness.hpp"
#include "mge/generator.hpp"
#include "mge/network.hpp"
#include "mge/train.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace mge {

struct DatasetSection {
    std::string kind = "blobs"; // blobs | moons | idx
    std::string path;           // idx: directory with the four MNIST files
    std::size_t train = 2000;
    std::size_t validation = 500;
    std::size_t test = 1000; // idx: 0 means the whole test file
    std::size_t classes = 4;
    std::size_t dim = 16;
    double noise = 0.15;
    double alternate_noise = 0.25; // noise of the transfer_accuracy dataset
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> center_seed;
};

struct NetworkSection {
    std::string type = "mlp"; // mlp | lenet
    std::vector<std::size_t> hidden{64, 64};
};

struct FitnessSection {
    std::string base = "accuracy";
    std::string additional = "robust_accuracy";
    double attack_eps = 0.1;
    double gamma = 1.0;
};

struct AttackSection {
    std::vector<double> epsilons{0.0, 0.05, 0.1, 0.2};
    double transfer_eps = 0.1;
    std::size_t examples = 100;
    bool targeted = true;
};

struct RunConfig {
    std::uint64_t seed = 0; // default for every section seed left unset
    DatasetSection dataset;
    NetworkSection network;
    TrainConfig train;
    GeneratorConfig generator;
    std::size_t pool_size = 10; // generator.count
    EvolutionConfig evolution;
    FitnessSection fitness;
    AttackSection attack;
    std::filesystem::path output = "out";

    /// Throws ConfigError naming the section and key on unknown keys, wrong
    /// types or out-of-range values.
    static RunConfig from_json(const nlohmann::json& j);
    static RunConfig load(const std::filesystem::path& path);

    /// Applies a new master seed to every section that did not pin its own.
    void reseed(std::uint64_t master);

    nlohmann::json to_json() const;
    void validate() const;

private:
    // Section seeds given explicitly in the document survive reseed().
    bool train_seed_pinned_ = false;
    bool generator_seed_pinned_ = false;
    bool evolution_seed_pinned_ = false;
};

struct Datasets {
    Dataset train;
    Dataset validation;
    Dataset test;
    Dataset alternate;
};

Datasets load_datasets(const RunConfig& cfg);
NetworkSpec build_network(const RunConfig& cfg, const Dataset& sample);
FitnessConfig build_fitness(const RunConfig& cfg, const Datasets& data);

} // namespace mge
