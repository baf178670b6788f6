#include "mge/dataset.hpp"

#include "mge/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>

namespace mge {

const char* split_name(Split s) noexcept {
    switch (s) {
    case Split::train: return "train";
    case Split::validation: return "validation";
    case Split::test: return "test";
    }
    return "?";
}

std::size_t Dataset::dim() const noexcept {
    std::size_t d = 1;
    for (auto s : shape) d *= s;
    return shape.empty() ? 0 : d;
}

void Dataset::validate() const {
    if (labels.empty()) throw InvalidInputError("dataset is empty");
    if (dim() == 0) throw InvalidInputError("dataset has a zero-sized feature shape");
    if (features.size() != labels.size() * dim())
        throw InvalidInputError("dataset holds " + std::to_string(features.size()) + " feature values for " +
                                std::to_string(labels.size()) + " examples of size " + std::to_string(dim()));
    if (classes < 2) throw InvalidInputError("dataset class count must be >= 2");
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= classes)
            throw InvalidInputError("label " + std::to_string(labels[i]) + " at example " + std::to_string(i) +
                                    " is outside [0, " + std::to_string(classes) + ")");
    for (double v : features)
        if (!std::isfinite(v)) throw InvalidInputError("dataset contains a non-finite feature");
}

Dataset Dataset::slice(std::size_t begin, std::size_t end, Split tag) const {
    if (begin > end || end > size()) throw InvalidInputError("dataset slice out of range");
    Dataset out{shape, classes, {}, {}, tag};
    const std::size_t d = dim();
    out.features.assign(features.begin() + static_cast<std::ptrdiff_t>(begin * d),
                        features.begin() + static_cast<std::ptrdiff_t>(end * d));
    out.labels.assign(labels.begin() + static_cast<std::ptrdiff_t>(begin), labels.begin() + static_cast<std::ptrdiff_t>(end));
    return out;
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
    Dataset out{shape, classes, {}, {}, split};
    const std::size_t d = dim();
    out.features.reserve(indices.size() * d);
    for (auto i : indices) {
        if (i >= size()) throw InvalidInputError("dataset subset index out of range");
        auto ex = example(i);
        out.features.insert(out.features.end(), ex.begin(), ex.end());
        out.labels.push_back(labels[i]);
    }
    return out;
}

SyntheticKind parse_synthetic_kind(const std::string& name) {
    if (name == "blobs") return SyntheticKind::blobs;
    if (name == "moons") return SyntheticKind::moons;
    throw ConfigError("unknown synthetic dataset kind '" + name + "'");
}

std::vector<Vec> blob_centers(const SyntheticSpec& spec) {
    RngStream rng = RngStream(spec.center_seed).child(0xb10b5);
    std::vector<Vec> centers(spec.classes, Vec(spec.dim));
    for (auto& c : centers)
        for (auto& v : c) v = 0.2 + 0.6 * rng.uniform01();
    return centers;
}

Dataset make_synthetic(const SyntheticSpec& spec) {
    if (spec.classes < 2) throw ConfigError("synthetic dataset needs at least 2 classes");
    if (spec.n < spec.classes) throw ConfigError("synthetic dataset needs n >= classes");
    if (!(spec.noise >= 0.0)) throw ConfigError("synthetic noise must be non-negative");

    RngStream rng(spec.seed);
    std::vector<int> labels(spec.n);
    for (std::size_t i = 0; i < spec.n; ++i) labels[i] = static_cast<int>(i % spec.classes);
    std::shuffle(labels.begin(), labels.end(), rng.engine());

    Dataset out;
    out.classes = spec.classes;
    out.labels = labels;
    std::normal_distribution<double> normal(0.0, 1.0);
    auto clip = [](double v) { return std::clamp(v, 0.0, 1.0); };

    if (spec.kind == SyntheticKind::blobs) {
        if (spec.dim == 0) throw ConfigError("blobs need dim >= 1");
        const auto centers = blob_centers(spec);
        out.shape = {spec.dim};
        out.features.reserve(spec.n * spec.dim);
        for (int y : labels)
            for (std::size_t j = 0; j < spec.dim; ++j)
                out.features.push_back(clip(centers[static_cast<std::size_t>(y)][j] + spec.noise * normal(rng.engine())));
    } else {
        if (spec.classes != 2) throw ConfigError("moons are a 2-class task");
        out.shape = {2};
        out.features.reserve(spec.n * 2);
        for (int y : labels) {
            const double t = std::numbers::pi * rng.uniform01();
            double px = y == 0 ? std::cos(t) : 1.0 - std::cos(t);
            double py = y == 0 ? std::sin(t) : 0.5 - std::sin(t);
            px += spec.noise * normal(rng.engine());
            py += spec.noise * normal(rng.engine());
            // raw range is x in [-1, 2], y in [-0.5, 1]
            out.features.push_back(clip((px + 1.0) / 3.0));
            out.features.push_back(clip((py + 0.5) / 1.5));
        }
    }
    out.validate();
    return out;
}

namespace {

constexpr std::uint32_t kIdxLabels = 0x00000801;
constexpr std::uint32_t kIdxImages = 0x00000803;

std::vector<unsigned char> read_all(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw StorageError("cannot open " + p.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<unsigned char>& b, std::size_t off, const std::string& file) {
    if (off + 4 > b.size()) throw FormatError(file + ": truncated header", b.size());
    return (std::uint32_t{b[off]} << 24) | (std::uint32_t{b[off + 1]} << 16) | (std::uint32_t{b[off + 2]} << 8) |
           std::uint32_t{b[off + 3]};
}

void write_be32(std::ofstream& out, std::uint32_t v) {
    const std::array<char, 4> b{static_cast<char>(v >> 24), static_cast<char>(v >> 16), static_cast<char>(v >> 8),
                                static_cast<char>(v)};
    out.write(b.data(), 4);
}

} // namespace

Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels, Split tag) {
    const auto img = read_all(images);
    const auto lab = read_all(labels);
    const std::string in = images.filename().string(), ln = labels.filename().string();

    if (read_be32(img, 0, in) != kIdxImages) throw FormatError(in + ": bad image magic", 0);
    if (read_be32(lab, 0, ln) != kIdxLabels) throw FormatError(ln + ": bad label magic", 0);
    const std::uint32_t count = read_be32(img, 4, in);
    const std::uint32_t rows = read_be32(img, 8, in);
    const std::uint32_t cols = read_be32(img, 12, in);
    const std::uint32_t lcount = read_be32(lab, 4, ln);
    if (lcount != count)
        throw FormatError(ln + ": label count " + std::to_string(lcount) + " != image count " + std::to_string(count), 4);
    const std::size_t pixels = std::size_t{rows} * cols;
    if (count == 0 || pixels == 0) throw FormatError(in + ": empty image set", 4);
    if (img.size() < 16 + std::size_t{count} * pixels) throw FormatError(in + ": truncated pixel data", img.size());
    if (lab.size() < 8 + std::size_t{count}) throw FormatError(ln + ": truncated label data", lab.size());

    Dataset out;
    out.shape = {1, rows, cols};
    out.split = tag;
    out.features.resize(std::size_t{count} * pixels);
    for (std::size_t i = 0; i < out.features.size(); ++i) out.features[i] = img[16 + i] / 255.0;
    out.labels.resize(count);
    int max_label = 0;
    for (std::size_t i = 0; i < count; ++i) {
        out.labels[i] = lab[8 + i];
        max_label = std::max(max_label, out.labels[i]);
    }
    out.classes = std::max<std::size_t>(10, static_cast<std::size_t>(max_label) + 1);
    return out;
}

void write_idx(const Dataset& data, const std::filesystem::path& images, const std::filesystem::path& labels) {
    data.validate();
    std::uint32_t rows = 1, cols = static_cast<std::uint32_t>(data.dim());
    if (data.shape.size() == 3) {
        if (data.shape[0] != 1) throw InvalidInputError("IDX images must be single-channel");
        rows = static_cast<std::uint32_t>(data.shape[1]);
        cols = static_cast<std::uint32_t>(data.shape[2]);
    }
    std::ofstream img(images, std::ios::binary), lab(labels, std::ios::binary);
    if (!img || !lab) throw StorageError("cannot create IDX output files");
    write_be32(img, kIdxImages);
    write_be32(img, static_cast<std::uint32_t>(data.size()));
    write_be32(img, rows);
    write_be32(img, cols);
    for (double v : data.features) img.put(static_cast<char>(static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0))));
    write_be32(lab, kIdxLabels);
    write_be32(lab, static_cast<std::uint32_t>(data.size()));
    for (int y : data.labels) lab.put(static_cast<char>(static_cast<unsigned char>(y)));
    if (!img || !lab) throw StorageError("failed writing IDX files");
}

} // namespace mge
