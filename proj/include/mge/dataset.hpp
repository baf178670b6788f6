#pragma once

#include "mge/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace mge {

enum class Split { train, validation, test };

const char* split_name(Split s) noexcept;

/// Labelled examples stored row-major: example i occupies
/// features[i * dim() .. (i + 1) * dim()).
struct Dataset {
    std::vector<std::size_t> shape; // per-example feature shape, {d} or {c, h, w}
    std::size_t classes = 0;
    Vec features;
    std::vector<int> labels;
    Split split = Split::train;

    std::size_t size() const noexcept { return labels.size(); }
    std::size_t dim() const noexcept;
    std::span<const double> example(std::size_t i) const { return {features.data() + i * dim(), dim()}; }

    /// Throws InvalidInputError on empty data, out-of-range labels,
    /// non-finite features or a feature/label count mismatch.
    void validate() const;

    /// Examples [begin, end) as a new dataset with the given split tag.
    Dataset slice(std::size_t begin, std::size_t end, Split tag) const;
    /// Examples in the given order.
    Dataset subset(std::span<const std::size_t> indices) const;
};

enum class SyntheticKind { blobs, moons };

SyntheticKind parse_synthetic_kind(const std::string& name);

/// Parameters of a synthetic classification task. Features live in [0, 1].
struct SyntheticSpec {
    SyntheticKind kind = SyntheticKind::blobs;
    std::size_t n = 0;
    std::size_t classes = 2;
    std::size_t dim = 2;       // blobs only; moons are always 2-D
    double noise = 0.05;       // per-coordinate Gaussian sigma
    std::uint64_t seed = 0;
    /// Seed for the class centers (blobs). Datasets sharing it share a
    /// distribution, which lets an alternate split differ only in noise.
    std::uint64_t center_seed = 0;
};

/// Deterministic in the spec. Labels cycle 0..classes-1 and are shuffled, so
/// every class appears floor(n/classes) or ceil(n/classes) times.
Dataset make_synthetic(const SyntheticSpec& spec);

/// The blob centers make_synthetic uses for `spec` (one row of `dim` per class).
std::vector<Vec> blob_centers(const SyntheticSpec& spec);

/// Reads an IDX image file (magic 0x00000803) and label file (0x00000801) in
/// the MNIST layout. Pixels are scaled to [0, 1]. Throws FormatError (with the
/// byte offset) on a bad magic, inconsistent counts or truncation.
Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels, Split tag = Split::train);

/// Writes `data` (features in [0,1], rank-3 or rank-1 shape) as an IDX pair;
/// pixels are quantized to bytes. Used to build fixtures.
void write_idx(const Dataset& data, const std::filesystem::path& images, const std::filesystem::path& labels);

} // namespace mge
