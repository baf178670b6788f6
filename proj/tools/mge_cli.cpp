// mge: train a base model, inspect its spectrum, generate and evolve model
// pools, attack them and summarize the results.

#include "mge/adversarial.hpp"
#include "mge/analysis.hpp"
#include "mge/config.hpp"
#include "mge/errors.hpp"
#include "mge/evolution.hpp"
#include "mge/parallel.hpp"
#include "mge/pool_store.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mge;

namespace {

constexpr int kExitInternal = 1;
constexpr int kExitUsage = 2;

struct Options {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> workers;
    bool verbose = false;

    std::string model;
    std::string pool;
    std::string attack_dir;
    std::string history;
    std::optional<std::size_t> count;
};

class Run {
public:
    Run(const Options& opt, std::string command) : opt_(opt), command_(std::move(command)) {
        cfg_ = opt.config.empty() ? RunConfig::from_json(json::object()) : RunConfig::load(opt.config);
        if (opt.seed) cfg_.reseed(*opt.seed);
        if (!opt.out.empty()) cfg_.output = opt.out;
        cfg_.validate();
        fs::create_directories(cfg_.output);
    }

    const RunConfig& cfg() const { return cfg_; }
    fs::path out() const { return cfg_.output; }

    void log(const std::string& msg) const {
        if (opt_.verbose) std::cerr << "[mge " << command_ << "] " << msg << '\n';
    }

    /// Records an artifact written by this run for the stamp.
    void artifact(const fs::path& p) { artifacts_[fs::relative(p, cfg_.output).generic_string()] = file_sha256(p); }

    void write_text(const fs::path& p, const std::string& text) {
        fs::create_directories(p.parent_path());
        atomic_write(p, text);
        artifact(p);
    }

    void write_json(const fs::path& p, const json& j) { write_text(p, j.dump(2) + "\n"); }

    /// Config echo, seeds and artifact hashes; nothing wall-clock.
    void stamp() {
        const json j = {{"command", command_},
                        {"config", cfg_.to_json()},
                        {"seeds",
                         {{"master", cfg_.seed},
                          {"dataset", cfg_.dataset.seed.value_or(cfg_.seed)},
                          {"train", cfg_.train.seed},
                          {"generator", cfg_.generator.seed},
                          {"evolution", cfg_.evolution.seed}}},
                        {"rng", RngStream::algorithm},
                        {"hash_algorithm", kHashAlgorithm},
                        {"model_file_version", kModelFileVersion},
                        {"artifacts", artifacts_}};
        atomic_write(out() / ("stamp-" + command_ + ".json"), j.dump(2) + "\n");
    }

    fs::path model_path() const { return opt_.model.empty() ? out() / "base.mgem" : fs::path(opt_.model); }
    fs::path pool_path() const { return opt_.pool.empty() ? out() / "pool" : fs::path(opt_.pool); }

    ParamSet load_checked(const fs::path& p, const NetworkSpec& spec) const {
        if (!fs::exists(p)) throw StorageError("model file " + p.string() + " does not exist");
        ParamSet params = load_model(p);
        check_params(spec, params);
        return params;
    }

private:
    Options opt_;
    std::string command_;
    RunConfig cfg_;
    std::map<std::string, std::string> artifacts_;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v, int digits = 4) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(digits) << v;
    return s.str();
}

std::string member_file(std::uint64_t id) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "model_%05llu.mgem", static_cast<unsigned long long>(id));
    return buf;
}

/// Time_trained of one model as recorded by `mge train` next to the base model.
std::optional<double> recorded_train_seconds(const fs::path& model) {
    const fs::path record = model.parent_path() / "train.json";
    if (!fs::exists(record)) return std::nullopt;
    std::ifstream in(record);
    const json j = json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.contains("timings")) return std::nullopt;
    return j["timings"].value("time_trained", 0.0);
}

/// Persists members plus a copy of the base model and returns the manifest.
PoolManifest write_pool(Run& run, const fs::path& dir, const std::string& pool_id, const ParamSet& base,
                        const NetworkSpec& spec, const Datasets& data, double base_val_accuracy,
                        const std::vector<Member>& members) {
    fs::create_directories(dir);
    PoolManifest m;
    m.pool_id = pool_id;
    m.base_file = "base.mgem";
    m.base_hash = save_model(base, dir / m.base_file).hash;
    run.artifact(dir / m.base_file);
    m.base_accuracy = base_val_accuracy;
    m.base_test_accuracy = evaluate_accuracy(spec, base, data.test);
    m.config = run.cfg().to_json();
    m.config.erase("output"); // keeps manifests comparable across output directories
    for (const auto& mem : members) {
        const auto& c = mem.candidate;
        ManifestMember mm;
        mm.id = c.id;
        mm.file = member_file(c.id);
        mm.hash = save_model(c.params, dir / mm.file).hash;
        run.artifact(dir / mm.file);
        mm.accuracy = c.val_accuracy;
        mm.test_accuracy = storage_accuracy(spec, c.params, data.test);
        mm.quality = mem.quality;
        mm.diversity = mem.diversity;
        mm.fitness = mem.fitness;
        mm.op = c.lineage.op;
        mm.parents = c.lineage.parents;
        mm.seconds = c.seconds;
        m.members.push_back(std::move(mm));
    }
    return m;
}

int cmd_train(const Options& opt) {
    Run run(opt, "train");
    const auto data = load_datasets(run.cfg());
    const auto spec = build_network(run.cfg(), data.train);
    run.log("training " + std::to_string(spec.layers.size()) + "-layer network on " + std::to_string(data.train.size()) +
            " examples");
    const auto result = train(spec, data.train, run.cfg().train);
    const ParamSet stored = result.params.rounded_f32();
    save_model(stored, run.out() / "base.mgem");
    run.artifact(run.out() / "base.mgem");

    const double val = evaluate_accuracy(spec, stored, data.validation);
    const double test = evaluate_accuracy(spec, stored, data.test);
    run.write_json(run.out() / "train.json", {{"accuracy",
                                               {{"train", evaluate_accuracy(spec, stored, data.train)},
                                                {"validation", val},
                                                {"test", test}}},
                                              {"parameters", stored.parameter_count()},
                                              {"initial_loss", result.initial_loss},
                                              {"epoch_loss", result.epoch_loss},
                                              {"timings", {{"time_trained", result.seconds}}}});
    run.stamp();
    std::cout << "base model: " << (run.out() / "base.mgem").string() << "\n"
              << "validation accuracy: " << fmt(val) << "\ntest accuracy: " << fmt(test) << "\n"
              << "time trained: " << fmt(result.seconds, 3) << " s\n";
    return 0;
}

int cmd_analyze(const Options& opt) {
    Run run(opt, "analyze");
    const auto data = load_datasets(run.cfg());
    const auto spec = build_network(run.cfg(), data.train);
    const ParamSet base = run.load_checked(run.model_path(), spec);
    const fs::path dir = run.out() / "analysis";

    std::ostringstream energy;
    energy << "tensor,index,cumulative_energy\n";
    json masks = json::object();
    const SpectrumMask mask = spectrum_mask(base, run.cfg().generator.t);
    for (std::size_t i = 0; i < base.size(); ++i) {
        const Vec cum = cumulative_energy(dct2(base[i].values));
        for (std::size_t k = 0; k < cum.size(); ++k) energy << base[i].name << ',' << k << ',' << fmt(cum[k], 9) << '\n';
        std::string bits;
        for (auto b : mask.layers[i].retained) bits.push_back(b ? '1' : '0');
        masks[base[i].name] = {{"size", mask.layers[i].size()},
                               {"kept", mask.layers[i].kept()},
                               {"retained_energy", mask.layers[i].retained_fraction},
                               {"retained", bits}};
    }
    run.write_text(dir / "energy.csv", energy.str());
    run.write_json(dir / "masks.json", {{"t", mask.t}, {"tensors", masks}});

    std::vector<double> fractions;
    for (int k = 0; k <= 10; ++k) fractions.push_back(0.05 * k);
    std::ostringstream decay;
    decay << "fraction,accuracy\n";
    std::cout << "zero-fill decay (test accuracy)\n";
    for (const auto& [f, acc] : zero_fill_decay(base, spec, data.test, fractions)) {
        decay << fmt(f, 2) << ',' << fmt(acc, 6) << '\n';
        std::cout << "  " << fmt(f, 2) << "  " << fmt(acc) << '\n';
    }
    run.write_text(dir / "zero_fill.csv", decay.str());

    const std::vector<std::pair<double, double>> bands{{0.0, 1.0 / 3.0}, {1.0 / 3.0, 2.0 / 3.0}, {2.0 / 3.0, 1.0}};
    std::ostringstream band_csv;
    band_csv << "band,lo,hi,accuracy\n";
    std::cout << "band sensitivity (noise bound " << fmt(run.cfg().generator.z, 2) << ")\n";
    const char* names[] = {"low", "mid", "high"};
    const auto results = band_sensitivity(base, spec, data.test, bands, run.cfg().generator.z, run.cfg().generator.seed);
    for (std::size_t b = 0; b < results.size(); ++b) {
        band_csv << names[b] << ',' << fmt(results[b].lo, 6) << ',' << fmt(results[b].hi, 6) << ','
                 << fmt(results[b].accuracy, 6) << '\n';
        std::cout << "  " << std::left << std::setw(5) << names[b] << fmt(results[b].accuracy) << '\n';
    }
    run.write_text(dir / "bands.csv", band_csv.str());
    run.stamp();
    return 0;
}

int cmd_generate(const Options& opt) {
    Run run(opt, "generate");
    const auto data = load_datasets(run.cfg());
    const auto spec = build_network(run.cfg(), data.train);
    const fs::path model = run.model_path();
    const ParamSet base = run.load_checked(model, spec);
    const std::size_t count = opt.count.value_or(run.cfg().pool_size);

    const auto t0 = std::chrono::steady_clock::now();
    Generator gen(spec, base, run.cfg().generator, data.validation);
    PoolResult pool = gen.pool(count);
    const double t_generated = seconds_since(t0);
    run.log(std::to_string(pool.accepted.size()) + " accepted after " + std::to_string(pool.attempts) + " attempts");

    const FitnessConfig fit = build_fitness(run.cfg(), data);
    Population pop;
    for (auto& c : pool.accepted) pop.members.push_back({std::move(c), 0.0, 0.0, 0.0, 0});
    evaluate_population(spec, pop, fit);

    const fs::path dir = run.pool_path();
    PoolManifest m = write_pool(run, dir, "pool-seed" + std::to_string(run.cfg().generator.seed), base, spec, data,
                                gen.base_accuracy(), pop.members);
    m.attempts = pool.attempts;
    m.time_generated = t_generated;
    if (const auto per_model = recorded_train_seconds(model))
        m.time_trained = *per_model * static_cast<double>(pop.members.size());
    write_manifest(m, dir);
    run.artifact(dir / "manifest.json");
    run.stamp();

    std::cout << "pool: " << dir.string() << " (" << m.members.size() << " models, " << pool.attempts << " attempts)\n"
              << "time generated: " << fmt(t_generated, 3) << " s\n";
    if (m.time_trained) {
        std::cout << "time trained:   " << fmt(*m.time_trained, 3) << " s (" << m.members.size() << " x recorded)\n";
        if (*m.time_trained > 0.0) std::cout << "ratio_time:     " << fmt(100.0 * time_ratio(t_generated, *m.time_trained), 2) << "%\n";
    } else {
        std::cout << "ratio_time: unavailable (no train.json next to the base model)\n";
    }
    return 0;
}

int cmd_evolve(const Options& opt) {
    Run run(opt, "evolve");
    const auto data = load_datasets(run.cfg());
    const auto spec = build_network(run.cfg(), data.train);
    const ParamSet base = run.load_checked(run.model_path(), spec);
    const Generator gen(spec, base, run.cfg().generator, data.validation);
    const FitnessConfig fit = build_fitness(run.cfg(), data);
    run.log("evolving for " + std::to_string(run.cfg().evolution.generations) + " generations");
    const EvolutionResult result = evolve(gen, run.cfg().evolution, fit);

    const fs::path dir = run.out() / "evolve";
    fs::create_directories(dir);
    save_model(result.best.candidate.params, dir / "best.mgem");
    run.artifact(dir / "best.mgem");
    run.write_text(dir / "history.csv", result.history_csv());

    std::vector<Member> seeds = result.seed.members;
    PoolManifest seed_pool = write_pool(run, dir / "seed_pool", "evolve-seed" + std::to_string(run.cfg().evolution.seed),
                                        base, spec, data, gen.base_accuracy(), seeds);
    write_manifest(seed_pool, dir / "seed_pool");
    run.artifact(dir / "seed_pool" / "manifest.json");
    PoolManifest final_pool = write_pool(run, dir / "pool", "evolve-final" + std::to_string(run.cfg().evolution.seed), base,
                                         spec, data, gen.base_accuracy(), result.final.members);
    final_pool.time_generated = result.seconds;
    write_manifest(final_pool, dir / "pool");
    run.artifact(dir / "pool" / "manifest.json");

    const auto& b = result.best;
    run.write_json(dir / "evolution.json", {{"best",
                                             {{"id", b.candidate.id},
                                              {"quality", b.quality},
                                              {"diversity", b.diversity},
                                              {"fitness", b.fitness},
                                              {"born", b.born},
                                              {"op", b.candidate.lineage.op}}},
                                            {"generations", result.history.size() - 1},
                                            {"timings", {{"seconds", result.seconds}}}});
    run.stamp();
    std::cout << "best: id " << b.candidate.id << "  F " << fmt(b.fitness) << "  F_q " << fmt(b.quality) << "  F_d "
              << fmt(b.diversity) << "\nhistory: " << (dir / "history.csv").string() << '\n';
    return 0;
}

int cmd_attack(const Options& opt) {
    Run run(opt, "attack");
    const auto data = load_datasets(run.cfg());
    const auto spec = build_network(run.cfg(), data.train);
    const fs::path dir = run.pool_path();
    const PoolManifest m = read_manifest(dir);
    verify_manifest(m, dir);
    const ParamSet base = run.load_checked(dir / m.base_file, spec);

    std::vector<PoolMember> members{{"base", base}};
    for (const auto& mm : m.members) members.push_back({std::to_string(mm.id), run.load_checked(dir / mm.file, spec)});

    const auto& a = run.cfg().attack;
    const Dataset sample = data.test.slice(0, std::min(a.examples, data.test.size()), Split::test);
    std::optional<std::vector<int>> targets;
    if (a.targeted) targets = default_targets(sample);
    const TransferReport report = transfer_matrix(spec, members.front(), members, sample, a.transfer_eps, targets);

    const fs::path out = run.out() / "attack";
    run.write_text(out / "transfer.csv", report.to_csv());

    std::ostringstream robust;
    robust << "id";
    for (double e : a.epsilons) robust << ",eps_" << fmt(e, 3);
    robust << '\n';
    std::vector<std::vector<double>> table(members.size(), std::vector<double>(a.epsilons.size()));
    parallel_for(members.size() * a.epsilons.size(), [&](std::size_t k) {
        const std::size_t i = k / a.epsilons.size(), e = k % a.epsilons.size();
        table[i][e] = robust_accuracy(spec, members[i].params, data.test, a.epsilons[e]);
    });
    for (std::size_t i = 0; i < members.size(); ++i) {
        robust << members[i].id;
        for (double v : table[i]) robust << ',' << fmt(v, 6);
        robust << '\n';
    }
    run.write_text(out / "robust.csv", robust.str());
    run.stamp();

    std::cout << "transfer from base at eps " << fmt(a.transfer_eps, 3) << " on " << sample.size() << " examples\n";
    std::cout << "  " << std::left << std::setw(8) << "id" << std::setw(10) << "clean" << "untargeted\n";
    for (const auto& r : report.rows)
        std::cout << "  " << std::setw(8) << r.id << std::setw(10) << fmt(r.clean) << fmt(r.untargeted) << '\n';
    return 0;
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

CsvTable read_csv(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw StorageError("cannot open " + p.string());
    CsvTable t;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (!line.empty() && line.back() == ',') cells.emplace_back();
        if (first) t.header = std::move(cells);
        else t.rows.push_back(std::move(cells));
        first = false;
    }
    return t;
}

int cmd_report(const Options& opt) {
    Run run(opt, "report");
    const fs::path dir = run.pool_path();
    if (!fs::is_directory(dir)) throw StorageError("pool directory " + dir.string() + " does not exist");
    const fs::path out = run.out() / "report";

    std::ostringstream text, csv;
    csv << "section,metric,value\n";
    auto row = [&](const std::string& section, const std::string& metric, const std::string& value) {
        text << "  " << std::left << std::setw(34) << metric << value << '\n';
        csv << section << ',' << metric << ',' << value << '\n';
    };

    const bool has_manifest = fs::exists(dir / "manifest.json");
    const PoolManifest m = has_manifest ? read_manifest(dir) : PoolManifest{};
    if (m.members.empty()) {
        const std::string notice = "empty pool: " + dir.string() + " has no members";
        std::cout << notice << '\n';
        run.write_text(out / "report.txt", notice + "\n");
        run.write_text(out / "report.csv", "section,metric,value\npool,members,0\n");
        run.stamp();
        return 0;
    }
    verify_manifest(m, dir);

    double sum = 0.0, lo = 1.0, hi = 0.0, sum_val = 0.0;
    std::size_t with_test = 0;
    for (const auto& mm : m.members) {
        sum_val += mm.accuracy;
        if (!mm.test_accuracy) continue;
        sum += *mm.test_accuracy;
        lo = std::min(lo, *mm.test_accuracy);
        hi = std::max(hi, *mm.test_accuracy);
        ++with_test;
    }
    const double n = static_cast<double>(m.members.size());
    text << "Classification accuracy (pool " << m.pool_id << ", " << m.members.size() << " models)\n";
    row("accuracy", "trained model (validation)", fmt(100.0 * m.base_accuracy, 2) + "%");
    row("accuracy", "generated mean (validation)", fmt(100.0 * sum_val / n, 2) + "%");
    if (m.base_test_accuracy) row("accuracy", "trained model (test)", fmt(100.0 * *m.base_test_accuracy, 2) + "%");
    if (with_test) {
        row("accuracy", "generated mean (test)", fmt(100.0 * sum / static_cast<double>(with_test), 2) + "%");
        row("accuracy", "generated min (test)", fmt(100.0 * lo, 2) + "%");
        row("accuracy", "generated max (test)", fmt(100.0 * hi, 2) + "%");
    }

    text << "\nTime for " << m.members.size() << " models\n";
    row("time", "time_generated_s", fmt(m.time_generated, 4));
    if (m.time_trained) {
        row("time", "time_trained_s", fmt(*m.time_trained, 4));
        row("time", "ratio_time", fmt(100.0 * time_ratio(m.time_generated, *m.time_trained), 2) + "%");
    } else {
        row("time", "ratio_time", "unavailable");
    }

    const fs::path attack = opt.attack_dir.empty() ? run.out() / "attack" : fs::path(opt.attack_dir);
    if (fs::exists(attack / "robust.csv")) {
        const CsvTable t = read_csv(attack / "robust.csv");
        text << "\nRobust accuracy (FGSM, white-box)\n";
        for (std::size_t c = 1; c < t.header.size(); ++c) {
            double base_v = 0.0, pool_sum = 0.0, pool_best = 0.0;
            std::size_t pool_n = 0;
            for (const auto& r : t.rows) {
                const double v = std::stod(r.at(c));
                if (r.at(0) == "base") {
                    base_v = v;
                } else {
                    pool_sum += v;
                    pool_best = std::max(pool_best, v);
                    ++pool_n;
                }
            }
            row("robustness", "base " + t.header[c], fmt(100.0 * base_v, 2) + "%");
            if (pool_n) {
                row("robustness", "pool mean " + t.header[c], fmt(100.0 * pool_sum / static_cast<double>(pool_n), 2) + "%");
                row("robustness", "pool best " + t.header[c], fmt(100.0 * pool_best, 2) + "%");
            }
        }
    }
    if (fs::exists(attack / "transfer.csv")) {
        const CsvTable t = read_csv(attack / "transfer.csv");
        double self = 0.0, lowest = 1.0;
        for (const auto& r : t.rows) {
            const double v = std::stod(r.at(2));
            if (r.at(0) == "base") self = v;
            else lowest = std::min(lowest, v);
        }
        text << "\nTransfer of base-model adversarial examples\n";
        row("transfer", "base self success", fmt(100.0 * self, 2) + "%");
        row("transfer", "lowest pool success", fmt(100.0 * lowest, 2) + "%");
    }

    const fs::path history = opt.history.empty() ? run.out() / "evolve" / "history.csv" : fs::path(opt.history);
    if (fs::exists(history)) {
        const CsvTable t = read_csv(history);
        if (!t.rows.empty()) {
            text << "\nEvolution\n";
            row("evolution", "generations", std::to_string(t.rows.size() - 1));
            row("evolution", "max fitness (generation 0)", t.rows.front().at(1));
            row("evolution", "max fitness (last)", t.rows.back().at(1));
        }
    }

    std::cout << text.str();
    run.write_text(out / "report.txt", text.str());
    run.write_text(out / "report.csv", csv.str());
    run.stamp();
    return 0;
}

void print_error(const std::string& kind, int code, const std::string& message) {
    std::cerr << "error: kind=" << kind << " exit=" << code << " message=" << json(message).dump() << '\n';
}

std::size_t resolve_workers(const Options& opt) {
    if (opt.workers) return *opt.workers;
    if (const char* env = std::getenv("MGE_WORKERS"); env && *env) {
        char* end = nullptr;
        const long long v = std::strtoll(env, &end, 10);
        if (*end != '\0' || v < 1) throw ConfigError("MGE_WORKERS must be a positive integer, got '" + std::string(env) + "'");
        return static_cast<std::size_t>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Training-free model generation and evolutionary enhancement"};
    app.require_subcommand(1);
    Options opt;
    app.add_option("--config", opt.config, "JSON run configuration")->check(CLI::ExistingFile);
    app.add_option("--out", opt.out, "Output directory (overrides output.directory)");
    app.add_option("--seed", opt.seed, "Master seed for every section without its own");
    app.add_option("--workers", opt.workers, "Worker threads (falls back to MGE_WORKERS)")->check(CLI::PositiveNumber);
    app.add_flag("--verbose,-v", opt.verbose, "Progress messages on stderr");

    auto* train_cmd = app.add_subcommand("train", "Train the base model");
    auto* analyze = app.add_subcommand("analyze", "Spectrum report for a model");
    analyze->add_option("--model", opt.model, "Model file (default <out>/base.mgem)");
    auto* generate = app.add_subcommand("generate", "Generate a pool of accepted models");
    generate->add_option("--model", opt.model, "Base model file (default <out>/base.mgem)");
    generate->add_option("--count", opt.count, "Pool size (overrides generator.count)")->check(CLI::PositiveNumber);
    generate->add_option("--pool", opt.pool, "Pool directory (default <out>/pool)");
    auto* evolve_cmd = app.add_subcommand("evolve", "Evolve a pool from the base model");
    evolve_cmd->add_option("--model", opt.model, "Base model file (default <out>/base.mgem)");
    auto* attack = app.add_subcommand("attack", "Transfer and robustness evaluation of a pool");
    attack->add_option("--pool", opt.pool, "Pool directory (default <out>/pool)");
    auto* report = app.add_subcommand("report", "Summary tables for a pool");
    report->add_option("--pool", opt.pool, "Pool directory (default <out>/pool)");
    report->add_option("--attack", opt.attack_dir, "Attack output directory (default <out>/attack)");
    report->add_option("--history", opt.history, "Evolution history CSV (default <out>/evolve/history.csv)");
    for (auto* sub : app.get_subcommands({})) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        print_error("usage", kExitUsage, e.what());
        return kExitUsage;
    }

    try {
        set_worker_count(resolve_workers(opt));
        if (train_cmd->parsed()) return cmd_train(opt);
        if (analyze->parsed()) return cmd_analyze(opt);
        if (generate->parsed()) return cmd_generate(opt);
        if (evolve_cmd->parsed()) return cmd_evolve(opt);
        if (attack->parsed()) return cmd_attack(opt);
        if (report->parsed()) return cmd_report(opt);
    } catch (const Error& e) {
        const int code = exit_code(e.kind());
        print_error(error_kind_name(e.kind()), code, e.what());
        return code;
    } catch (const std::filesystem::filesystem_error& e) {
        const int code = exit_code(ErrorKind::storage);
        print_error(error_kind_name(ErrorKind::storage), code, e.what());
        return code;
    } catch (const std::exception& e) {
        print_error("internal", kExitInternal, e.what());
        return kExitInternal;
    }
    return kExitUsage;
}
