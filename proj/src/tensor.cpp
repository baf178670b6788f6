#include "mge/tensor.hpp"

#include "mge/errors.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>

namespace mge {

namespace {

using cd = std::complex<double>;

bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// In-place iterative radix-2 FFT. `inverse` flips the twiddle sign; no 1/n.
void fft_pow2(std::vector<cd>& a, bool inverse) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    const double sign = inverse ? 1.0 : -1.0;
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t half = len / 2;
        std::vector<cd> tw(half);
        for (std::size_t k = 0; k < half; ++k) {
            const double ang = sign * 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(len);
            tw[k] = {std::cos(ang), std::sin(ang)};
        }
        for (std::size_t i = 0; i < n; i += len) {
            for (std::size_t k = 0; k < half; ++k) {
                const cd u = a[i + k];
                const cd v = a[i + k + half] * tw[k];
                a[i + k] = u + v;
                a[i + k + half] = u - v;
            }
        }
    }
}

// Arbitrary-length DFT. Powers of two go straight to radix-2, anything else
// through Bluestein's chirp-z convolution.
void fft(std::vector<cd>& a, bool inverse) {
    const std::size_t n = a.size();
    if (n <= 1) return;
    if (is_pow2(n)) {
        fft_pow2(a, inverse);
        return;
    }
    const double sign = inverse ? 1.0 : -1.0;
    // k^2 is reduced mod 2n in integers so the chirp angle stays accurate for large n.
    std::vector<cd> chirp(n);
    const std::uint64_t two_n = 2 * static_cast<std::uint64_t>(n);
    for (std::size_t k = 0; k < n; ++k) {
        const std::uint64_t kk = (static_cast<std::uint64_t>(k) * k) % two_n;
        const double ang = sign * std::numbers::pi * static_cast<double>(kk) / static_cast<double>(n);
        chirp[k] = {std::cos(ang), std::sin(ang)};
    }
    std::size_t m = 1;
    while (m < 2 * n - 1) m <<= 1;
    std::vector<cd> fa(m), fb(m);
    for (std::size_t k = 0; k < n; ++k) fa[k] = a[k] * chirp[k];
    fb[0] = std::conj(chirp[0]);
    for (std::size_t k = 1; k < n; ++k) fb[k] = fb[m - k] = std::conj(chirp[k]);
    fft_pow2(fa, false);
    fft_pow2(fb, false);
    for (std::size_t i = 0; i < m; ++i) fa[i] *= fb[i];
    fft_pow2(fa, true);
    const double inv_m = 1.0 / static_cast<double>(m);
    for (std::size_t k = 0; k < n; ++k) a[k] = fa[k] * inv_m * chirp[k];
}

} // namespace

void require_finite(std::span<const double> x, const char* what) {
    if (x.empty()) throw InvalidInputError(std::string(what) + ": empty vector");
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!std::isfinite(x[i]))
            throw InvalidInputError(std::string(what) + ": non-finite value at index " + std::to_string(i));
    }
}

std::uint64_t RngStream::mix(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

RngStream RngStream::child(std::initializer_list<std::uint64_t> path) const {
    RngStream s = *this;
    for (auto idx : path) s = s.child(idx);
    return s;
}

// Makhoul's reordering: DCT-II of x is Re(W^k * FFT(v)_k), with v the even
// samples followed by the reversed odd samples and W = exp(-i*pi/(2n)).
Vec dct2(std::span<const double> x) {
    require_finite(x, "dct2");
    const std::size_t n = x.size();
    std::vector<cd> v(n);
    for (std::size_t k = 0; 2 * k < n; ++k) v[k] = x[2 * k];
    for (std::size_t k = 0; 2 * k + 1 < n; ++k) v[n - 1 - k] = x[2 * k + 1];
    fft(v, false);

    const double nd = static_cast<double>(n);
    const double s0 = std::sqrt(1.0 / nd);
    const double sk = std::sqrt(2.0 / nd);
    Vec out(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double ang = -std::numbers::pi * static_cast<double>(k) / (2.0 * nd);
        const double re = v[k].real() * std::cos(ang) - v[k].imag() * std::sin(ang);
        out[k] = re * (k == 0 ? s0 : sk);
    }
    return out;
}

// Inverse of the above: rebuild FFT(v)_k = W^-k (c_k - i c_{n-k}) from the
// unscaled coefficients, inverse-FFT, then undo the even/odd permutation.
Vec idct2(std::span<const double> c) {
    require_finite(c, "idct2");
    const std::size_t n = c.size();
    const double nd = static_cast<double>(n);
    auto raw = [&](std::size_t k) -> double {
        if (k == 0) return c[0] * std::sqrt(nd);
        if (k >= n) return 0.0;
        return c[k] * std::sqrt(nd / 2.0);
    };
    std::vector<cd> v(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double ang = std::numbers::pi * static_cast<double>(k) / (2.0 * nd);
        const cd u(raw(k), k == 0 ? 0.0 : -raw(n - k));
        v[k] = u * cd(std::cos(ang), std::sin(ang));
    }
    fft(v, true);
    Vec out(n);
    for (std::size_t k = 0; 2 * k < n; ++k) out[2 * k] = v[k].real() / nd;
    for (std::size_t k = 0; 2 * k + 1 < n; ++k) out[2 * k + 1] = v[n - 1 - k].real() / nd;
    return out;
}

std::vector<std::size_t> energy_order(std::span<const double> c) {
    std::vector<std::size_t> idx(c.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return c[a] * c[a] > c[b] * c[b]; });
    return idx;
}

Vec cumulative_energy(std::span<const double> c) {
    require_finite(c, "cumulative_energy");
    const auto order = energy_order(c);
    double total = 0.0;
    for (double v : c) total += v * v;
    if (total == 0.0) throw DegenerateSpectrumError("cumulative_energy: all-zero spectrum");

    Vec out(c.size());
    double run = 0.0;
    for (std::size_t i = 0; i < order.size(); ++i) {
        run += c[order[i]] * c[order[i]];
        out[i] = std::min(run / total, 1.0);
    }
    out.back() = 1.0;
    return out;
}

Vec sample_truncated_normal(double bound, std::size_t count, RngStream& rng) {
    if (!(bound > 0.0) || !std::isfinite(bound))
        throw ConfigError("sample_truncated_normal: bound must be positive, got " + std::to_string(bound));
    std::normal_distribution<double> normal(0.0, bound / 3.0);
    Vec out(count);
    for (auto& v : out) {
        do {
            v = normal(rng.engine());
        } while (std::abs(v) > bound);
    }
    return out;
}

Vec sample_bounded_normal(double z, std::size_t count, RngStream& rng) {
    if (!(z > 0.0) || z > 0.2)
        throw ConfigError("sample_bounded_normal: latent bound z must lie in (0, 0.2], got " + std::to_string(z));
    if (count == 0) throw ConfigError("sample_bounded_normal: count must be >= 1");
    return sample_truncated_normal(z, count, rng);
}

double ks_statistic(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw InvalidInputError("ks_statistic: empty sample");
    Vec sa(a.begin(), a.end()), sb(b.begin(), b.end());
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    const double n = static_cast<double>(sa.size());
    const double m = static_cast<double>(sb.size());
    std::size_t i = 0, j = 0;
    double best = 0.0;
    // Evaluate the CDF gap just after each distinct value in the merged order.
    while (i < sa.size() || j < sb.size()) {
        double v;
        if (j == sb.size() || (i < sa.size() && sa[i] <= sb[j]))
            v = sa[i];
        else
            v = sb[j];
        while (i < sa.size() && sa[i] <= v) ++i;
        while (j < sb.size() && sb[j] <= v) ++j;
        best = std::max(best, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
    }
    return best;
}

double l2_norm(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

} // namespace mge
