#pragma once

// Spectral diagnostics of a trained model: which coefficients matter, how
// accuracy decays when low-energy coefficients are zeroed, and how sensitive
// each positional frequency band is to noise.

#include "mge/dataset.hpp"
#include "mge/network.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace mge {

/// Positional DCT bands: indices [0, n/3), [n/3, 2n/3), [2n/3, n).
enum class FrequencyBand { low, mid, high };

FrequencyBand parse_band(const std::string& name);
const char* band_name(FrequencyBand b) noexcept;
std::pair<std::size_t, std::size_t> band_range(FrequencyBand b, std::size_t n);

/// Zeroes the lowest-|magnitude| ceil(fraction * band length) coefficients of
/// `band`, maps the change back to parameter space and marks the
/// ceil(fraction * n) positions with the largest |change| (lowest index first
/// on ties). Requires 0 < fraction < 1. Throws DegenerateSpectrumError for an
/// all-zero layer.
std::vector<std::uint8_t> unimportant_mask_spatial(std::span<const double> layer, FrequencyBand band, double fraction);

/// Accuracy after zeroing floor(f * n) lowest-energy DCT coefficients of every
/// tensor, for each fraction f (ascending, within [0, 1]).
std::vector<std::pair<double, double>> zero_fill_decay(const ParamSet& base, const NetworkSpec& spec,
                                                       const Dataset& testset, const std::vector<double>& fractions);

struct BandResult {
    double lo = 0.0;
    double hi = 0.0;
    double accuracy = 0.0;
};

/// Adds truncated-normal noise (bound `scale`) to the coefficients whose
/// index fraction lies in [lo, hi), one band at a time, and reports accuracy.
/// Bands must be disjoint; scale 0 leaves the model untouched.
std::vector<BandResult> band_sensitivity(const ParamSet& base, const NetworkSpec& spec, const Dataset& testset,
                                         const std::vector<std::pair<double, double>>& bands, double scale,
                                         std::uint64_t seed);

} // namespace mge
