#include "mge/generator.hpp"

#include "mge/errors.hpp"
#include "mge/parallel.hpp"
#include "mge/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace mge {

namespace {

// Slack on the energy comparison so a prefix whose exact share equals t is not
// rejected over a rounding error in the squared magnitudes.
constexpr double kEnergySlack = 1e-12;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

} // namespace

void GeneratorConfig::validate() const {
    if (!(t >= 0.0 && t <= 1.0)) throw ConfigError("generator.t must lie in [0, 1]");
    if (!(z > 0.0 && z <= 0.2)) throw ConfigError("generator.z must lie in (0, 0.2]");
    if (n_D < 1) throw ConfigError("generator.n_D must be >= 1");
    if (!(epsilon >= 0.0)) throw ConfigError("generator.epsilon must be >= 0");
    if (adaptive_after < 0) throw ConfigError("generator.adaptive_after must be >= 0");
}

std::size_t LayerMask::kept() const noexcept {
    return static_cast<std::size_t>(std::count(retained.begin(), retained.end(), std::uint8_t{1}));
}

LayerMask mask_from_coefficients(std::span<const double> coeffs, double t) {
    if (!(t >= 0.0 && t <= 1.0)) throw ConfigError("energy threshold t must lie in [0, 1]");
    const Vec cum = cumulative_energy(coeffs); // throws on an all-zero spectrum
    LayerMask m;
    m.retained.assign(coeffs.size(), 0);
    if (t >= 1.0) {
        std::fill(m.retained.begin(), m.retained.end(), std::uint8_t{1});
        m.retained_fraction = 1.0;
        return m;
    }
    if (t <= 0.0) return m;
    const auto order = energy_order(coeffs);
    for (std::size_t i = 0; i < order.size(); ++i) {
        m.retained[order[i]] = 1;
        m.retained_fraction = cum[i];
        if (cum[i] >= t - kEnergySlack) break;
    }
    return m;
}

LayerMask importance_mask(std::span<const double> layer, double t) { return mask_from_coefficients(dct2(layer), t); }

SpectrumMask spectrum_mask(const ParamSet& base, double t) {
    SpectrumMask m;
    m.t = t;
    for (const auto& tensor : base.tensors()) {
        try {
            m.layers.push_back(importance_mask(tensor.values, t));
        } catch (const DegenerateSpectrumError&) {
            throw DegenerateSpectrumError("tensor '" + tensor.name + "' is all zeros; its spectrum has no energy to retain");
        }
    }
    return m;
}

namespace {

GeneratedLayer splice(std::span<const double> coeffs, const LayerMask& mask, double z, RngStream& rng) {
    if (mask.size() != coeffs.size()) throw StructuralError("mask length does not match the layer");
    const std::size_t replaced = mask.size() - mask.kept();
    GeneratedLayer out;
    if (replaced > 0) out.latent = sample_bounded_normal(z, replaced, rng);
    Vec merged(coeffs.begin(), coeffs.end());
    std::size_t next = 0;
    for (std::size_t i = 0; i < merged.size(); ++i)
        if (!mask.retained[i]) merged[i] = out.latent[next++];
    out.values = idct2(merged);
    return out;
}

} // namespace

GeneratedLayer generate_layer(std::span<const double> layer, const LayerMask& mask, double z, RngStream& rng) {
    const Vec coeffs = dct2(layer);
    return splice(coeffs, mask, z, rng);
}

bool accept(double candidate_accuracy, double base_accuracy, double epsilon) {
    return candidate_accuracy > base_accuracy || std::abs(candidate_accuracy - base_accuracy) < epsilon;
}

double storage_accuracy(const NetworkSpec& spec, const ParamSet& params, const Dataset& data) {
    return evaluate_accuracy(spec, params.rounded_f32(), data);
}

Generator::Generator(NetworkSpec spec, ParamSet base, GeneratorConfig cfg, Dataset valset)
    : spec_(std::move(spec)), base_(std::move(base)), cfg_(cfg), valset_(std::move(valset)) {
    cfg_.validate();
    spec_.validate();
    check_params(spec_, base_);
    valset_.validate();
    mask_ = spectrum_mask(base_, cfg_.t);
    base_coeffs_.reserve(base_.size());
    for (const auto& t : base_.tensors()) base_coeffs_.push_back(dct2(t.values));
    base_accuracy_ = storage_accuracy(spec_, base_, valset_);
}

Candidate Generator::regenerate(const std::vector<Vec>& coeffs, RngStream rng, double z) const {
    Candidate c;
    c.params = base_;
    c.latent.resize(base_.size());
    for (std::size_t i = 0; i < base_.size(); ++i) {
        RngStream layer_rng = rng.child(i);
        auto g = splice(coeffs[i], mask_.layers[i], z, layer_rng);
        c.params[i].values = std::move(g.values);
        c.latent[i] = std::move(g.latent);
    }
    return c;
}

void Generator::judge(Candidate& c) const {
    c.val_accuracy = storage_accuracy(spec_, c.params, valset_);
    c.accepted = accepts(c.val_accuracy);
}

Candidate Generator::attempt(std::uint64_t attempt_index, double z) const {
    const auto start = Clock::now();
    Candidate c = regenerate(base_coeffs_, attempt_stream(attempt_index), z);
    c.id = attempt_index;
    judge(c);
    c.seconds = seconds_since(start);
    return c;
}

Candidate Generator::resample(const ParamSet& parent, RngStream rng, double z) const {
    if (!parent.same_layout(base_)) throw StructuralError("parent does not share the base model's layout");
    const auto start = Clock::now();
    std::vector<Vec> coeffs;
    coeffs.reserve(parent.size());
    for (const auto& t : parent.tensors()) coeffs.push_back(dct2(t.values));
    Candidate c = regenerate(coeffs, rng, z);
    judge(c);
    c.seconds = seconds_since(start);
    return c;
}

PoolResult Generator::pool(std::size_t count) const {
    if (count < 1) throw ConfigError("pool size must be >= 1");
    const auto start = Clock::now();
    const std::size_t budget = static_cast<std::size_t>(cfg_.n_D) * count;
    // Adaptive z makes each attempt depend on the previous outcome, so it runs serially.
    const std::size_t batch = cfg_.adaptive_after > 0 ? 1 : std::max<std::size_t>(1, worker_count());

    PoolResult r;
    r.base_accuracy = base_accuracy_;
    double z = cfg_.z;
    int rejected_run = 0;
    std::size_t next = 0;
    while (r.accepted.size() < count && next < budget) {
        const std::size_t n = std::min(batch, budget - next);
        std::vector<Candidate> results(n);
        parallel_for(n, [&](std::size_t i) { results[i] = attempt(next + i, z); });
        for (auto& c : results) {
            if (r.accepted.size() == count) break;
            ++r.attempts;
            if (c.accepted) {
                r.accepted.push_back(std::move(c));
                rejected_run = 0;
            } else if (cfg_.adaptive_after > 0 && ++rejected_run >= cfg_.adaptive_after) {
                z /= 2.0;
                rejected_run = 0;
            }
        }
        next += n;
    }
    r.final_z = z;
    r.seconds = seconds_since(start);
    if (r.accepted.empty())
        throw GenerationFailedError("no candidate accepted after " + std::to_string(r.attempts) + " attempts", r.attempts, 0);
    return r;
}

Candidate generate_model(const ParamSet& base, const NetworkSpec& spec, const GeneratorConfig& cfg, const Dataset& valset) {
    const auto start = Clock::now();
    const Generator gen(spec, base, cfg, valset);
    Candidate c = gen.attempt(0, cfg.z);
    c.seconds = seconds_since(start);
    return c;
}

PoolResult generate_pool(const ParamSet& base, const NetworkSpec& spec, const GeneratorConfig& cfg,
                         const Dataset& valset, std::size_t count) {
    const auto start = Clock::now();
    const Generator gen(spec, base, cfg, valset);
    PoolResult r = gen.pool(count);
    r.seconds = seconds_since(start);
    return r;
}

} // namespace mge
