#include "mge/config.hpp"

#include "mge/errors.hpp"

#include <fstream>
#include <set>

namespace mge {

namespace {

using nlohmann::json;

class Section {
public:
    Section(const json& doc, std::string name) : name_(std::move(name)) {
        if (doc.contains(name_)) {
            if (!doc.at(name_).is_object()) throw ConfigError("section '" + name_ + "' must be an object");
            j_ = &doc.at(name_);
        }
    }

    void read(const char* key, double& out) {
        if (const json* v = find(key)) {
            if (!v->is_number()) fail(key, "expected a number");
            out = v->get<double>();
        }
    }

    void read(const char* key, int& out) {
        if (const json* v = find(key)) {
            if (!v->is_number_integer()) fail(key, "expected an integer");
            out = v->get<int>();
        }
    }

    void read(const char* key, std::size_t& out) {
        if (const json* v = find(key)) out = static_cast<std::size_t>(unsigned_value(key, *v));
    }

    void read(const char* key, std::optional<std::uint64_t>& out) {
        if (const json* v = find(key); v && !v->is_null()) out = unsigned_value(key, *v);
    }

    bool read_seed(const char* key, std::uint64_t& out) {
        const json* v = find(key);
        if (!v || v->is_null()) return false;
        out = unsigned_value(key, *v);
        return true;
    }

    void read(const char* key, bool& out) {
        if (const json* v = find(key)) {
            if (!v->is_boolean()) fail(key, "expected true or false");
            out = v->get<bool>();
        }
    }

    void read(const char* key, std::string& out) {
        if (const json* v = find(key)) {
            if (!v->is_string()) fail(key, "expected a string");
            out = v->get<std::string>();
        }
    }

    template <class T>
    void read(const char* key, std::vector<T>& out) {
        if (const json* v = find(key)) {
            if (!v->is_array()) fail(key, "expected an array");
            out.clear();
            for (const auto& e : *v) {
                if constexpr (std::is_floating_point_v<T>) {
                    if (!e.is_number()) fail(key, "expected an array of numbers");
                    out.push_back(e.get<T>());
                } else {
                    out.push_back(static_cast<T>(unsigned_value(key, e)));
                }
            }
        }
    }

    const json* object(const char* key) {
        const json* v = find(key);
        if (v && !v->is_object()) fail(key, "expected an object");
        return v;
    }

    /// Rejects keys nobody asked for.
    void finish() const {
        if (!j_) return;
        for (const auto& [k, _] : j_->items())
            if (!seen_.count(k)) throw ConfigError("unknown key '" + k + "' in section '" + name_ + "'");
    }

    [[noreturn]] void fail(const std::string& key, const std::string& why) const {
        throw ConfigError(name_ + "." + key + ": " + why);
    }

private:
    const json* find(const char* key) {
        seen_.insert(key);
        if (!j_ || !j_->contains(key)) return nullptr;
        return &j_->at(key);
    }

    std::uint64_t unsigned_value(const char* key, const json& v) const {
        if (v.is_number_unsigned()) return v.get<std::uint64_t>();
        if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
        fail(key, "expected a non-negative integer");
    }

    const json* j_ = nullptr;
    std::string name_;
    std::set<std::string> seen_;
};

json opt_json(const std::optional<std::uint64_t>& v) { return v ? json(*v) : json(nullptr); }

} // namespace

RunConfig RunConfig::from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("config document must be a JSON object");
    static const std::set<std::string> sections{"seed",      "dataset", "network", "train", "generator",
                                                "evolution", "fitness", "attack",  "output"};
    for (const auto& [k, _] : j.items())
        if (!sections.count(k)) throw ConfigError("unknown section '" + k + "'");

    RunConfig c;
    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned() && !(j["seed"].is_number_integer() && j["seed"].get<std::int64_t>() >= 0))
            throw ConfigError("seed: expected a non-negative integer");
        c.seed = j["seed"].get<std::uint64_t>();
    }

    Section d(j, "dataset");
    d.read("kind", c.dataset.kind);
    d.read("path", c.dataset.path);
    if (const json* splits = d.object("splits")) {
        json wrapper{{"dataset.splits", *splits}};
        Section s(wrapper, "dataset.splits");
        s.read("train", c.dataset.train);
        s.read("validation", c.dataset.validation);
        s.read("test", c.dataset.test);
        s.finish();
    }
    d.read("classes", c.dataset.classes);
    d.read("dim", c.dataset.dim);
    d.read("noise", c.dataset.noise);
    d.read("alternate_noise", c.dataset.alternate_noise);
    d.read("seed", c.dataset.seed);
    d.read("center_seed", c.dataset.center_seed);
    d.finish();

    Section n(j, "network");
    n.read("type", c.network.type);
    n.read("hidden", c.network.hidden);
    n.finish();

    Section t(j, "train");
    std::string opt = optimizer_name(c.train.optimizer);
    t.read("optimizer", opt);
    try {
        c.train.optimizer = parse_optimizer(opt);
    } catch (const ConfigError& e) {
        t.fail("optimizer", e.what());
    }
    t.read("learning_rate", c.train.learning_rate);
    t.read("epochs", c.train.epochs);
    t.read("batch_size", c.train.batch_size);
    c.train_seed_pinned_ = t.read_seed("seed", c.train.seed);
    t.finish();

    Section g(j, "generator");
    g.read("t", c.generator.t);
    g.read("z", c.generator.z);
    g.read("n_D", c.generator.n_D);
    g.read("epsilon", c.generator.epsilon);
    g.read("adaptive_after", c.generator.adaptive_after);
    g.read("count", c.pool_size);
    std::string distribution = GeneratorConfig::distribution;
    g.read("distribution", distribution);
    if (distribution != GeneratorConfig::distribution)
        g.fail("distribution", "only " + std::string(GeneratorConfig::distribution) + " is supported");
    c.generator_seed_pinned_ = g.read_seed("seed", c.generator.seed);
    g.finish();

    Section e(j, "evolution");
    e.read("generations", c.evolution.generations);
    e.read("parents", c.evolution.parents);
    e.read("mutations", c.evolution.mutations);
    e.read("fusions", c.evolution.fusions);
    std::string weights = fusion_weights_name(c.evolution.weights);
    e.read("weights", weights);
    try {
        c.evolution.weights = parse_fusion_weights(weights);
    } catch (const ConfigError& err) {
        e.fail("weights", err.what());
    }
    c.evolution_seed_pinned_ = e.read_seed("seed", c.evolution.seed);
    e.finish();

    Section f(j, "fitness");
    f.read("base", c.fitness.base);
    f.read("additional", c.fitness.additional);
    f.read("attack_eps", c.fitness.attack_eps);
    f.read("gamma", c.fitness.gamma);
    f.finish();

    Section a(j, "attack");
    a.read("epsilons", c.attack.epsilons);
    a.read("transfer_eps", c.attack.transfer_eps);
    a.read("examples", c.attack.examples);
    a.read("targeted", c.attack.targeted);
    a.finish();

    Section o(j, "output");
    std::string dir = c.output.string();
    o.read("directory", dir);
    c.output = dir;
    o.finish();

    c.reseed(c.seed);
    c.validate();
    return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
    }
    return from_json(j);
}

void RunConfig::reseed(std::uint64_t master) {
    seed = master;
    if (!train_seed_pinned_) train.seed = master;
    if (!generator_seed_pinned_) generator.seed = master;
    if (!evolution_seed_pinned_) evolution.seed = master;
}

void RunConfig::validate() const {
    auto wrap = [](const char* section, auto&& fn) {
        try {
            fn();
        } catch (const ConfigError& e) {
            const std::string what = e.what();
            if (what.rfind(section, 0) == 0) throw;
            throw ConfigError(std::string(section) + ": " + what);
        }
    };
    if (dataset.kind != "blobs" && dataset.kind != "moons" && dataset.kind != "idx")
        throw ConfigError("dataset.kind: expected blobs, moons or idx, got '" + dataset.kind + "'");
    if (dataset.kind == "idx" && dataset.path.empty()) throw ConfigError("dataset.path: required for idx datasets");
    if (dataset.train == 0) throw ConfigError("dataset.splits.train: must be > 0");
    if (dataset.validation == 0) throw ConfigError("dataset.splits.validation: must be > 0");
    if (dataset.kind != "idx" && dataset.test == 0) throw ConfigError("dataset.splits.test: must be > 0");
    if (dataset.classes < 2) throw ConfigError("dataset.classes: must be >= 2");
    if (dataset.kind == "moons" && dataset.classes != 2) throw ConfigError("dataset.classes: moons has exactly 2 classes");
    if (dataset.dim == 0) throw ConfigError("dataset.dim: must be > 0");
    if (!(dataset.noise >= 0.0)) throw ConfigError("dataset.noise: must be >= 0");
    if (!(dataset.alternate_noise >= 0.0)) throw ConfigError("dataset.alternate_noise: must be >= 0");
    if (network.type != "mlp" && network.type != "lenet")
        throw ConfigError("network.type: expected mlp or lenet, got '" + network.type + "'");
    for (auto h : network.hidden)
        if (h == 0) throw ConfigError("network.hidden: layer widths must be > 0");
    wrap("train", [&] { train.validate(); });
    wrap("generator", [&] { generator.validate(); });
    if (pool_size == 0) throw ConfigError("generator.count: must be > 0");
    wrap("evolution", [&] { evolution.validate(); });
    for (const auto* name : {&fitness.base, &fitness.additional}) {
        try {
            (void)parse_criterion_kind(*name);
        } catch (const ConfigError& e) {
            throw ConfigError(std::string("fitness.") + (name == &fitness.base ? "base" : "additional") + ": " + e.what());
        }
    }
    if (fitness.base == "robust_accuracy" || fitness.additional == "robust_accuracy")
        if (!(fitness.attack_eps > 0.0)) throw ConfigError("fitness.attack_eps: must be > 0 for robust_accuracy");
    if (!(fitness.gamma >= 0.0)) throw ConfigError("fitness.gamma: must be >= 0");
    if (attack.epsilons.empty()) throw ConfigError("attack.epsilons: must not be empty");
    for (double e : attack.epsilons)
        if (!(e >= 0.0)) throw ConfigError("attack.epsilons: values must be >= 0");
    if (!(attack.transfer_eps >= 0.0)) throw ConfigError("attack.transfer_eps: must be >= 0");
    if (attack.examples == 0) throw ConfigError("attack.examples: must be > 0");
    if (output.empty()) throw ConfigError("output.directory: must not be empty");
}

nlohmann::json RunConfig::to_json() const {
    return {
        {"seed", seed},
        {"dataset",
         {{"kind", dataset.kind},
          {"path", dataset.path},
          {"splits", {{"train", dataset.train}, {"validation", dataset.validation}, {"test", dataset.test}}},
          {"classes", dataset.classes},
          {"dim", dataset.dim},
          {"noise", dataset.noise},
          {"alternate_noise", dataset.alternate_noise},
          {"seed", opt_json(dataset.seed)},
          {"center_seed", opt_json(dataset.center_seed)}}},
        {"network", {{"type", network.type}, {"hidden", network.hidden}}},
        {"train",
         {{"optimizer", optimizer_name(train.optimizer)},
          {"learning_rate", train.learning_rate},
          {"epochs", train.epochs},
          {"batch_size", train.batch_size},
          {"seed", train.seed}}},
        {"generator",
         {{"t", generator.t},
          {"z", generator.z},
          {"n_D", generator.n_D},
          {"epsilon", generator.epsilon},
          {"adaptive_after", generator.adaptive_after},
          {"count", pool_size},
          {"seed", generator.seed},
          {"distribution", GeneratorConfig::distribution}}},
        {"evolution",
         {{"generations", evolution.generations},
          {"parents", evolution.parents},
          {"mutations", evolution.mutations},
          {"fusions", evolution.fusions},
          {"weights", fusion_weights_name(evolution.weights)},
          {"seed", evolution.seed}}},
        {"fitness",
         {{"base", fitness.base},
          {"additional", fitness.additional},
          {"attack_eps", fitness.attack_eps},
          {"gamma", fitness.gamma}}},
        {"attack",
         {{"epsilons", attack.epsilons},
          {"transfer_eps", attack.transfer_eps},
          {"examples", attack.examples},
          {"targeted", attack.targeted}}},
        {"output", {{"directory", output.generic_string()}}},
    };
}

Datasets load_datasets(const RunConfig& cfg) {
    const auto& d = cfg.dataset;
    Datasets out;
    if (d.kind == "idx") {
        const std::filesystem::path dir = d.path;
        Dataset full = load_idx(dir / "train-images-idx3-ubyte", dir / "train-labels-idx1-ubyte", Split::train);
        if (full.size() < d.train + d.validation)
            throw ConfigError("dataset.splits: train + validation exceeds the " + std::to_string(full.size()) +
                              " training examples available");
        out.train = full.slice(0, d.train, Split::train);
        out.validation = full.slice(d.train, d.train + d.validation, Split::validation);
        Dataset test = load_idx(dir / "t10k-images-idx3-ubyte", dir / "t10k-labels-idx1-ubyte", Split::test);
        const std::size_t n_test = d.test == 0 ? test.size() : std::min(d.test, test.size());
        out.test = test.slice(0, n_test, Split::test);
        out.alternate = out.test;
        return out;
    }

    const std::uint64_t seed = d.seed.value_or(cfg.seed);
    SyntheticSpec s;
    s.kind = parse_synthetic_kind(d.kind);
    s.n = d.train + d.validation + d.test;
    s.classes = d.classes;
    s.dim = d.dim;
    s.noise = d.noise;
    s.seed = seed;
    s.center_seed = d.center_seed.value_or(seed);
    const Dataset all = make_synthetic(s);
    out.train = all.slice(0, d.train, Split::train);
    out.validation = all.slice(d.train, d.train + d.validation, Split::validation);
    out.test = all.slice(d.train + d.validation, s.n, Split::test);

    SyntheticSpec alt = s;
    alt.n = d.test;
    alt.noise = d.alternate_noise;
    alt.seed = RngStream::mix(seed ^ 0xa17e);
    out.alternate = make_synthetic(alt);
    out.alternate.split = Split::test;
    return out;
}

NetworkSpec build_network(const RunConfig& cfg, const Dataset& sample) {
    if (cfg.network.type == "lenet") {
        if (sample.shape.size() != 3 || sample.shape[1] != sample.shape[2])
            throw ConfigError("network.type: lenet needs square image inputs");
        return make_lenet_like(sample.shape[0], sample.shape[1], sample.classes);
    }
    return make_mlp(sample.dim(), cfg.network.hidden, sample.classes);
}

FitnessConfig build_fitness(const RunConfig& cfg, const Datasets& data) {
    auto make = [&](const std::string& name) {
        switch (parse_criterion_kind(name)) {
        case CriterionKind::accuracy: return Criterion::accuracy(data.validation);
        case CriterionKind::robust_accuracy: return Criterion::robust_accuracy(data.validation, cfg.fitness.attack_eps);
        case CriterionKind::transfer_accuracy: return Criterion::transfer_accuracy(data.alternate);
        }
        throw ConfigError("unknown criterion '" + name + "'");
    };
    return {make(cfg.fitness.base), make(cfg.fitness.additional), cfg.fitness.gamma};
}

} // namespace mge
