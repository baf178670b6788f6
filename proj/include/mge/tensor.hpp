#pragma once

// Numeric primitives shared by every other module: the orthonormal DCT-II
// pair, spectral energy accounting, bounded sampling and the two-sample
// Kolmogorov-Smirnov statistic.

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace mge {

using Vec = std::vector<double>;

/// Throws InvalidInputError if `x` is empty or holds a NaN/Inf. `what` names
/// the offending argument in the message.
void require_finite(std::span<const double> x, const char* what);

/// Seeded random stream. Child streams are derived by mixing the parent seed
/// with an index through SplitMix64, so a tree of (candidate, layer) streams
/// is reproducible without sharing state between workers.
class RngStream {
public:
    static constexpr const char* algorithm = "mt19937_64/splitmix64";

    explicit RngStream(std::uint64_t seed) : seed_(seed), engine_(mix(seed)) {}

    std::uint64_t seed() const noexcept { return seed_; }

    RngStream child(std::uint64_t index) const { return RngStream(mix(seed_ ^ mix(index + 0x9e3779b97f4a7c15ULL))); }
    RngStream child(std::initializer_list<std::uint64_t> path) const;

    std::mt19937_64& engine() noexcept { return engine_; }

    double uniform01() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
    std::uint64_t below(std::uint64_t n) { return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(engine_); }

    static std::uint64_t mix(std::uint64_t x) noexcept;

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

/// Orthonormal DCT-II. O(n log n) for every length (Bluestein for
/// non-powers of two). Energy preserving: |dct2(x)| == |x|.
Vec dct2(std::span<const double> x);

/// Orthonormal DCT-III, the exact inverse of dct2.
Vec idct2(std::span<const double> c);

/// Running energy fraction of the coefficients taken in descending order of
/// squared magnitude (stable: equal magnitudes keep index order). The last
/// entry is exactly 1.0. Throws DegenerateSpectrumError for an all-zero input.
Vec cumulative_energy(std::span<const double> c);

/// Indices of `c` ordered by descending squared magnitude, ties by lower index.
std::vector<std::size_t> energy_order(std::span<const double> c);

/// Zero-mean normal with sigma = z/3, rejection-resampled into [-z, z].
/// Requires 0 < z <= 0.2 (ConfigError otherwise).
Vec sample_bounded_normal(double z, std::size_t count, RngStream& rng);

/// Same distribution without the latent-range cap on `bound`; used by the
/// diagnostic perturbation sweeps. Requires bound > 0.
Vec sample_truncated_normal(double bound, std::size_t count, RngStream& rng);

/// Two-sample Kolmogorov-Smirnov statistic: sup |F_a(v) - F_b(v)|.
double ks_statistic(std::span<const double> a, std::span<const double> b);

double l2_norm(std::span<const double> x);

} // namespace mge
