#include "doctest.h"

#include "fixture.hpp"
#include "mge/dataset.hpp"
#include "mge/errors.hpp"

#include <fstream>
#include <map>

using namespace mge;
using mge::testing::ScratchDir;

namespace {

void write_bytes(const std::filesystem::path& p, const std::vector<unsigned char>& b) {
    std::ofstream out(p, std::ios::binary);
    out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
}

void be32(std::vector<unsigned char>& b, std::uint32_t v) {
    for (int s = 24; s >= 0; s -= 8) b.push_back(static_cast<unsigned char>(v >> s));
}

// Two 2x3 images and their labels, assembled byte by byte.
std::pair<std::vector<unsigned char>, std::vector<unsigned char>> tiny_idx() {
    std::vector<unsigned char> img, lab;
    be32(img, 0x803);
    be32(img, 2);
    be32(img, 2);
    be32(img, 3);
    for (unsigned char px : {0, 51, 102, 153, 204, 255, 255, 0, 0, 0, 0, 17}) img.push_back(px);
    be32(lab, 0x801);
    be32(lab, 2);
    lab.push_back(7);
    lab.push_back(3);
    return {img, lab};
}

} // namespace

TEST_CASE("IDX loader reads a hand-assembled file exactly") {
    ScratchDir dir("idx");
    auto [img, lab] = tiny_idx();
    write_bytes(dir / "i", img);
    write_bytes(dir / "l", lab);
    const Dataset d = load_idx(dir / "i", dir / "l", Split::test);
    CHECK(d.size() == 2);
    CHECK(d.shape == std::vector<std::size_t>{1, 2, 3});
    CHECK(d.classes == 10);
    CHECK(d.labels == std::vector<int>{7, 3});
    CHECK(d.split == Split::test);
    CHECK(d.features[1] == 51.0 / 255.0);
    CHECK(d.features[5] == 1.0);
    CHECK(d.features[11] == 17.0 / 255.0);
}

TEST_CASE("IDX format errors carry the byte offset") {
    ScratchDir dir("idx-bad");
    auto [img, lab] = tiny_idx();
    write_bytes(dir / "l", lab);

    auto bad_magic = img;
    bad_magic[3] = 0x04;
    write_bytes(dir / "i", bad_magic);
    try {
        load_idx(dir / "i", dir / "l");
        FAIL("expected a format error");
    } catch (const FormatError& e) {
        CHECK(e.offset == 0);
        CHECK(std::string(e.what()).find("byte offset 0") != std::string::npos);
    }

    auto truncated = img;
    truncated.resize(20);
    write_bytes(dir / "i", truncated);
    CHECK_THROWS_AS(load_idx(dir / "i", dir / "l"), FormatError);

    write_bytes(dir / "i", {0, 0, 8});
    CHECK_THROWS_AS(load_idx(dir / "i", dir / "l"), FormatError);

    auto miscount = lab;
    miscount[7] = 3;
    write_bytes(dir / "i", img);
    write_bytes(dir / "l", miscount);
    CHECK_THROWS_AS(load_idx(dir / "i", dir / "l"), FormatError);

    CHECK_THROWS_AS(load_idx(dir / "missing", dir / "l"), StorageError);
}

TEST_CASE("write_idx round trips quantized images") {
    ScratchDir dir("idx-rt");
    auto [img, lab] = tiny_idx();
    write_bytes(dir / "i", img);
    write_bytes(dir / "l", lab);
    const Dataset d = load_idx(dir / "i", dir / "l");
    write_idx(d, dir / "i2", dir / "l2");
    const Dataset back = load_idx(dir / "i2", dir / "l2");
    CHECK(back.features == d.features);
    CHECK(back.labels == d.labels);
}

TEST_CASE("synthetic blobs are deterministic, balanced and inside the unit cube") {
    SyntheticSpec s;
    s.n = 403;
    s.classes = 4;
    s.dim = 6;
    s.seed = 5;
    const Dataset a = make_synthetic(s);
    const Dataset b = make_synthetic(s);
    CHECK(a.features == b.features);
    CHECK(a.labels == b.labels);
    a.validate();
    std::map<int, int> counts;
    for (int l : a.labels) ++counts[l];
    for (auto [label, count] : counts) CHECK((count == 100 || count == 101));
    for (double v : a.features) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
    s.seed = 6;
    CHECK(make_synthetic(s).features != a.features);
    CHECK(blob_centers(s) == blob_centers(SyntheticSpec{s.kind, 10, 4, 6, 0.5, 99, s.center_seed}));
}

TEST_CASE("moons are two-class only") {
    SyntheticSpec s;
    s.kind = SyntheticKind::moons;
    s.n = 100;
    s.classes = 2;
    const Dataset d = make_synthetic(s);
    CHECK(d.dim() == 2);
    s.classes = 3;
    CHECK_THROWS_AS(make_synthetic(s), ConfigError);
    CHECK_THROWS_AS(parse_synthetic_kind("spirals"), ConfigError);
}

TEST_CASE("slices and subsets") {
    SyntheticSpec s;
    s.n = 20;
    s.classes = 2;
    s.dim = 3;
    const Dataset d = make_synthetic(s);
    const Dataset part = d.slice(5, 9, Split::validation);
    CHECK(part.size() == 4);
    CHECK(part.split == Split::validation);
    CHECK(part.example(0)[2] == d.example(5)[2]);
    const std::vector<std::size_t> idx{3, 1};
    const Dataset sub = d.subset(idx);
    CHECK(sub.labels == std::vector<int>{d.labels[3], d.labels[1]});
    CHECK_THROWS_AS(d.slice(5, 21, Split::test), InvalidInputError);

    Dataset broken = d;
    broken.labels[0] = 2;
    CHECK_THROWS_AS(broken.validate(), InvalidInputError);
}
