#include "doctest.h"

#include "fixture.hpp"
#include "mge/errors.hpp"
#include "mge/pool_store.hpp"

#include <bit>
#include <cstring>
#include <fstream>

using namespace mge;
using mge::testing::ScratchDir;

namespace {

std::vector<std::uint8_t> bytes_of(const std::string& s) { return {s.begin(), s.end()}; }

void le32(std::vector<std::uint8_t>& b, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void lef32(std::vector<std::uint8_t>& b, float f) { le32(b, std::bit_cast<std::uint32_t>(f)); }

// A two-tensor model written field by field.
std::vector<std::uint8_t> hand_assembled() {
    std::vector<std::uint8_t> b{'M', 'G', 'E', 'M'};
    le32(b, 1);
    le32(b, 2);
    le32(b, 1);
    b.push_back('w');
    le32(b, 2);
    le32(b, 2);
    le32(b, 3);
    for (float f : {0.5f, -1.25f, 3.0f, 0.0f, 1e-3f, -7.5f}) lef32(b, f);
    le32(b, 1);
    b.push_back('b');
    le32(b, 1);
    le32(b, 2);
    lef32(b, 0.25f);
    lef32(b, -0.125f);
    const Digest d = sha256(b);
    b.insert(b.end(), d.begin(), d.end());
    return b;
}

ParamSet random_model(std::uint64_t seed) {
    RngStream rng(seed);
    std::vector<ParamTensor> tensors;
    const std::size_t count = 1 + rng.below(5);
    for (std::size_t t = 0; t < count; ++t) {
        ParamTensor pt;
        pt.name = "t" + std::to_string(t);
        const std::size_t rank = 1 + rng.below(4);
        std::size_t n = 1;
        for (std::size_t r = 0; r < rank; ++r) {
            pt.shape.push_back(static_cast<std::uint32_t>(1 + rng.below(6)));
            n *= pt.shape.back();
        }
        for (std::size_t k = 0; k < n; ++k) pt.values.push_back(static_cast<float>((rng.uniform01() - 0.5) * 20));
        tensors.push_back(std::move(pt));
    }
    return ParamSet(std::move(tensors));
}

void write_file(const std::filesystem::path& p, const std::vector<std::uint8_t>& b) {
    std::ofstream out(p, std::ios::binary);
    out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
}

} // namespace

TEST_CASE("sha256 known answers") {
    CHECK(to_hex(sha256(bytes_of("abc"))) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(to_hex(sha256({})) == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("hand-assembled file decodes exactly and re-encodes to the same bytes") {
    const auto bytes = hand_assembled();
    const ParamSet p = decode_model(bytes);
    REQUIRE(p.size() == 2);
    CHECK(p[0].name == "w");
    CHECK(p[0].shape == std::vector<std::uint32_t>{2, 3});
    CHECK(p[0].values == Vec{0.5, -1.25, 3.0, 0.0, static_cast<double>(1e-3f), -7.5});
    CHECK(p[1].name == "b");
    CHECK(p[1].values == Vec{0.25, -0.125});
    CHECK(encode_model(p) == bytes);

    ScratchDir dir("fixture");
    write_file(dir / "m.mgem", bytes);
    CHECK(load_model(dir / "m.mgem") == p);
}

TEST_CASE("save and load are bit exact for random models") {
    ScratchDir dir("roundtrip");
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const ParamSet p = random_model(seed);
        const auto path = dir / ("m" + std::to_string(seed) + ".mgem");
        const ModelFileInfo info = save_model(p, path);
        CHECK(info.tensors == p.size());
        CHECK(info.hash.size() == 64);
        const ParamSet back = load_model(path);
        REQUIRE(back.size() == p.size());
        for (std::size_t t = 0; t < p.size(); ++t) {
            CHECK(back[t].name == p[t].name);
            CHECK(back[t].shape == p[t].shape);
            REQUIRE(back[t].values.size() == p[t].values.size());
            for (std::size_t k = 0; k < p[t].values.size(); ++k)
                REQUIRE(std::bit_cast<std::uint64_t>(back[t].values[k]) == std::bit_cast<std::uint64_t>(p[t].values[k]));
        }
    }
    CHECK_FALSE(std::filesystem::exists(dir / "m0.mgem.tmp"));
}

TEST_CASE("corruption, truncation and unknown versions are rejected") {
    const auto good = hand_assembled();
    for (std::size_t pos : {std::size_t{12}, std::size_t{20}, good.size() - 40, good.size() - 1}) {
        auto bad = good;
        bad[pos] ^= 0x01;
        CHECK_THROWS_AS(decode_model(bad), CorruptionError);
    }
    auto magic = good;
    magic[0] = 'X';
    CHECK_THROWS_AS(decode_model(magic), CorruptionError);
    for (std::size_t len : {std::size_t{0}, std::size_t{10}, good.size() - 1})
        CHECK_THROWS_AS(decode_model(std::span(good).first(len)), CorruptionError);

    // A well-formed file of a future version.
    std::vector<std::uint8_t> v2(good.begin(), good.end() - 32);
    v2[4] = 2;
    const Digest d = sha256(v2);
    v2.insert(v2.end(), d.begin(), d.end());
    try {
        decode_model(v2);
        FAIL("expected an unsupported version");
    } catch (const UnsupportedVersionError& e) {
        CHECK(e.version == 2);
    }

    // Count claims more tensors than present, with a valid hash.
    std::vector<std::uint8_t> lying(good.begin(), good.end() - 32);
    lying[8] = 3;
    const Digest d2 = sha256(lying);
    lying.insert(lying.end(), d2.begin(), d2.end());
    CHECK_THROWS_AS(decode_model(lying), CorruptionError);
}

TEST_CASE("unwritable models are refused") {
    ParamSet unnamed({ParamTensor{"", {1}, {1.0}}});
    CHECK_THROWS_AS(encode_model(unnamed), InvalidInputError);
    ParamSet mismatched({ParamTensor{"x", {2}, {1.0}}});
    CHECK_THROWS_AS(encode_model(mismatched), InvalidInputError);
    ParamSet nan({ParamTensor{"x", {1}, {std::nan("")}}});
    CHECK_THROWS_AS(encode_model(nan), InvalidInputError);
    CHECK_THROWS_AS(save_model(random_model(1), "/nonexistent-dir/x.mgem"), StorageError);
    CHECK_THROWS_AS(load_model("/nonexistent-dir/x.mgem"), StorageError);
}

TEST_CASE("time ratio") {
    CHECK(100 * time_ratio(184.57, 744.71) == doctest::Approx(24.78).epsilon(1e-3));
    CHECK(100 * time_ratio(9614.99, 71229.58) == doctest::Approx(13.50).epsilon(1e-3));
    CHECK(time_ratio(1.0, 4.0) == 0.25);
    CHECK_THROWS_AS(time_ratio(1.0, 0.0), UndefinedRatioError);
    CHECK_THROWS_AS(time_ratio(1.0, -1.0), UndefinedRatioError);
}

TEST_CASE("manifests round trip and verify their members") {
    ScratchDir dir("manifest");
    PoolManifest m;
    m.pool_id = "p1";
    m.base_file = "base.mgem";
    m.base_hash = save_model(random_model(7), dir / m.base_file).hash;
    m.base_accuracy = 0.9;
    m.config = {{"generator", {{"t", 0.8}}}};
    m.attempts = 5;
    for (std::uint64_t id : {0u, 3u}) {
        ManifestMember mm;
        mm.id = id;
        mm.file = "model_" + std::to_string(id) + ".mgem";
        mm.hash = save_model(random_model(id + 10), dir / mm.file).hash;
        mm.accuracy = 0.88;
        mm.quality = 0.88;
        mm.op = id ? "fuse" : "seed";
        if (id) mm.parents = {0, 1};
        mm.seconds = 0.01 * static_cast<double>(id);
        m.members.push_back(mm);
    }
    m.time_generated = 1.5;
    m.time_trained = 6.0;
    write_manifest(m, dir.path());

    const PoolManifest back = read_manifest(dir.path());
    CHECK(back.to_json() == m.to_json());
    CHECK(back.members[1].parents == std::vector<std::uint64_t>{0, 1});
    CHECK(back.members[1].seconds == 0.01 * 3.0);
    CHECK_FALSE(back.members[0].diversity.has_value());
    CHECK_NOTHROW(verify_manifest(back, dir.path()));

    // Wall-clock values live only under "timings".
    nlohmann::json j = m.to_json();
    CHECK(j["timings"]["ratio_time"] == 0.25);
    j.erase("timings");
    CHECK(j.dump().find("seconds") == std::string::npos);

    std::filesystem::remove(dir / "model_3.mgem");
    CHECK_THROWS_AS(verify_manifest(back, dir.path()), StorageError);
    save_model(random_model(99), dir / "model_3.mgem");
    CHECK_THROWS_AS(verify_manifest(back, dir.path()), CorruptionError);

    nlohmann::json broken = m.to_json();
    broken["member_count"] = 5;
    CHECK_THROWS_AS(PoolManifest::from_json(broken), CorruptionError);
    broken.erase("members");
    CHECK_THROWS_AS(PoolManifest::from_json(broken), CorruptionError);
}
