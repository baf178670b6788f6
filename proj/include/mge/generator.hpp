#pragma once

// Training-free model generation. Each parameter tensor of a trained base
// model is taken to the DCT domain; the high-energy coefficients that carry a
// fraction t of the tensor's energy are kept and every other coefficient is
// replaced by a bounded normal draw. A candidate is accepted when its
// validation accuracy beats the base model or stays within epsilon of it.

#include "mge/dataset.hpp"
#include "mge/network.hpp"
#include "mge/tensor.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace mge {

struct GeneratorConfig {
    double t = 0.8;         // energy threshold
    double z = 0.2;         // latent bound, replaced coefficients lie in [-z, z]
    int n_D = 100;          // attempt budget per requested model
    double epsilon = 0.05;  // acceptance tolerance
    std::uint64_t seed = 0;
    /// Halve z after this many consecutive rejections; 0 disables.
    int adaptive_after = 0;

    static constexpr const char* distribution = "truncated_normal(mu=0, sigma=z/3, [-z, z])";

    void validate() const;
};

/// Retention mask of one parameter tensor in coefficient space.
struct LayerMask {
    std::vector<std::uint8_t> retained; // 1 = important (kept), 0 = resampled
    double retained_fraction = 0.0;     // energy share of the kept coefficients

    std::size_t size() const noexcept { return retained.size(); }
    std::size_t kept() const noexcept;
};

struct SpectrumMask {
    double t = 0.0;
    std::vector<LayerMask> layers; // one per ParamSet tensor
};

/// Minimal set of coefficients, taken in descending squared magnitude (lower
/// index first on ties), whose energy fraction reaches t. t >= 1 keeps every
/// coefficient, t == 0 keeps none. Throws DegenerateSpectrumError when all
/// coefficients are zero.
LayerMask mask_from_coefficients(std::span<const double> coeffs, double t);

/// mask_from_coefficients(dct2(layer), t).
LayerMask importance_mask(std::span<const double> layer, double t);

SpectrumMask spectrum_mask(const ParamSet& base, double t);

struct GeneratedLayer {
    Vec values;  // regenerated parameters
    Vec latent;  // draws placed at the non-retained coefficients, in index order
};

/// Keeps the masked-in DCT coefficients of `layer`, replaces the rest with
/// sample_bounded_normal(z) draws and inverse-transforms the merged spectrum.
GeneratedLayer generate_layer(std::span<const double> layer, const LayerMask& mask, double z, RngStream& rng);

/// Algorithm-1 acceptance: candidate beats the base or |difference| < epsilon.
bool accept(double candidate_accuracy, double base_accuracy, double epsilon);

/// Accuracy at storage precision (parameters rounded to float32), the value
/// every acceptance decision and fitness score is computed from.
double storage_accuracy(const NetworkSpec& spec, const ParamSet& params, const Dataset& data);

struct Lineage {
    std::string op = "seed"; // seed | mutate | fuse
    std::vector<std::uint64_t> parents;
};

struct Candidate {
    std::uint64_t id = 0;
    ParamSet params;
    std::vector<Vec> latent; // per tensor
    double seconds = 0.0;    // wall-clock of sampling + transform + evaluation
    bool accepted = false;
    double val_accuracy = 0.0;
    Lineage lineage;
};

struct PoolResult {
    std::vector<Candidate> accepted;
    std::size_t attempts = 0;
    double seconds = 0.0; // total wall-clock including spectrum analysis
    double base_accuracy = 0.0;
    double final_z = 0.0;
};

/// Holds the base model, its spectra and the validation set so repeated
/// attempts only pay for sampling, inverse transforms and evaluation.
class Generator {
public:
    Generator(NetworkSpec spec, ParamSet base, GeneratorConfig cfg, Dataset valset);

    const NetworkSpec& spec() const noexcept { return spec_; }
    const ParamSet& base() const noexcept { return base_; }
    const GeneratorConfig& config() const noexcept { return cfg_; }
    const SpectrumMask& mask() const noexcept { return mask_; }
    const Dataset& validation() const noexcept { return valset_; }
    double base_accuracy() const noexcept { return base_accuracy_; }

    /// Stream for attempt k; tensor i of that attempt uses attempt_stream(k).child(i).
    RngStream attempt_stream(std::uint64_t attempt) const { return RngStream(cfg_.seed).child({0xa77e, attempt}); }

    /// One sample-evaluate step from the base model.
    Candidate attempt(std::uint64_t attempt_index, double z) const;

    /// Keeps `parent`'s retained coefficients, resamples the rest from `rng`
    /// and evaluates the result. Used by mutation.
    Candidate resample(const ParamSet& parent, RngStream rng, double z) const;

    /// Fills `c.val_accuracy` and `c.accepted`.
    void judge(Candidate& c) const;

    bool accepts(double accuracy) const { return accept(accuracy, base_accuracy_, cfg_.epsilon); }

    /// Collects `count` accepted candidates, at most n_D * count attempts.
    /// Throws GenerationFailedError if none is accepted.
    PoolResult pool(std::size_t count) const;

private:
    Candidate regenerate(const std::vector<Vec>& coeffs, RngStream rng, double z) const;

    NetworkSpec spec_;
    ParamSet base_;
    GeneratorConfig cfg_;
    Dataset valset_;
    SpectrumMask mask_;
    std::vector<Vec> base_coeffs_;
    double base_accuracy_ = 0.0;
};

/// Single generation attempt with the configured seed (attempt 0).
Candidate generate_model(const ParamSet& base, const NetworkSpec& spec, const GeneratorConfig& cfg, const Dataset& valset);

PoolResult generate_pool(const ParamSet& base, const NetworkSpec& spec, const GeneratorConfig& cfg,
                         const Dataset& valset, std::size_t count);

} // namespace mge
