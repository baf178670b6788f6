#include "mge/pool_store.hpp"

#include "mge/errors.hpp"

#include <openssl/evp.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <memory>

namespace mge {

static_assert(std::endian::native == std::endian::little, "model files are written on little-endian hosts only");

Digest sha256(std::span<const std::uint8_t> bytes) {
    Digest d{};
    unsigned int len = 0;
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 || EVP_DigestFinal_ex(ctx.get(), d.data(), &len) != 1 ||
        len != d.size())
        throw StorageError("sha256 computation failed");
    return d;
}

std::string to_hex(const Digest& d) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string s;
    s.reserve(64);
    for (auto b : d) {
        s.push_back(digits[b >> 4]);
        s.push_back(digits[b & 15]);
    }
    return s;
}

namespace {

std::vector<std::uint8_t> read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw StorageError("cannot open " + p.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> b) : b_(b) {}

    std::uint32_t u32() {
        need(4, "integer");
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= std::uint32_t{b_[pos_ + static_cast<std::size_t>(i)]} << (8 * i);
        pos_ += 4;
        return v;
    }

    std::span<const std::uint8_t> bytes(std::size_t n, const char* what) {
        need(n, what);
        auto s = b_.subspan(pos_, n);
        pos_ += n;
        return s;
    }

    std::size_t pos() const noexcept { return pos_; }

private:
    void need(std::size_t n, const char* what) const {
        if (b_.size() - pos_ < n)
            throw CorruptionError(std::string("model file truncated while reading ") + what + " at byte " + std::to_string(pos_));
    }

    std::span<const std::uint8_t> b_;
    std::size_t pos_ = 0;
};

} // namespace

std::string file_sha256(const std::filesystem::path& path) { return to_hex(sha256(read_file(path))); }

std::vector<std::uint8_t> encode_model(const ParamSet& params) {
    std::vector<std::uint8_t> out{'M', 'G', 'E', 'M'};
    put_u32(out, kModelFileVersion);
    put_u32(out, static_cast<std::uint32_t>(params.size()));
    for (const auto& t : params.tensors()) {
        if (t.name.empty()) throw InvalidInputError("model tensors need a non-empty name");
        std::size_t n = 1;
        for (auto d : t.shape) n *= d;
        if (t.shape.empty() || n != t.values.size())
            throw InvalidInputError("tensor '" + t.name + "' shape does not match its payload");
        require_finite(t.values, t.name.c_str());
        put_u32(out, static_cast<std::uint32_t>(t.name.size()));
        out.insert(out.end(), t.name.begin(), t.name.end());
        put_u32(out, static_cast<std::uint32_t>(t.shape.size()));
        for (auto d : t.shape) put_u32(out, d);
        for (double v : t.values) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    }
    const Digest d = sha256(out);
    out.insert(out.end(), d.begin(), d.end());
    return out;
}

ParamSet decode_model(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 4 + 8 + 32) throw CorruptionError("model file too short (" + std::to_string(bytes.size()) + " bytes)");
    if (std::memcmp(bytes.data(), "MGEM", 4) != 0) throw CorruptionError("bad model file magic");
    Reader header(bytes.subspan(4));
    const std::uint32_t version = header.u32();
    if (version != kModelFileVersion)
        throw UnsupportedVersionError("unsupported model file version " + std::to_string(version), version);

    const auto body = bytes.first(bytes.size() - 32);
    const Digest stored = [&] {
        Digest d{};
        std::memcpy(d.data(), bytes.data() + body.size(), 32);
        return d;
    }();
    if (sha256(body) != stored) throw CorruptionError("model file hash mismatch");

    Reader r(body.subspan(8));
    const std::uint32_t count = r.u32();
    std::vector<ParamTensor> tensors;
    tensors.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        ParamTensor t;
        const std::uint32_t name_len = r.u32();
        if (name_len == 0) throw CorruptionError("empty tensor name");
        const auto name = r.bytes(name_len, "tensor name");
        t.name.assign(name.begin(), name.end());
        const std::uint32_t rank = r.u32();
        if (rank == 0) throw CorruptionError("tensor '" + t.name + "' has rank 0");
        std::uint64_t n = 1;
        for (std::uint32_t k = 0; k < rank; ++k) {
            t.shape.push_back(r.u32());
            n *= t.shape.back();
        }
        if (n > body.size()) throw CorruptionError("tensor '" + t.name + "' claims more values than the file holds");
        const auto payload = r.bytes(static_cast<std::size_t>(n) * 4, "tensor payload");
        t.values.resize(static_cast<std::size_t>(n));
        for (std::size_t k = 0; k < t.values.size(); ++k) {
            std::uint32_t bits = 0;
            for (int b = 0; b < 4; ++b) bits |= std::uint32_t{payload[4 * k + static_cast<std::size_t>(b)]} << (8 * b);
            t.values[k] = static_cast<double>(std::bit_cast<float>(bits));
        }
        tensors.push_back(std::move(t));
    }
    if (r.pos() != body.size() - 8) throw CorruptionError("trailing bytes after the last tensor");
    return ParamSet(std::move(tensors));
}

void atomic_write(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw StorageError("cannot create " + tmp.string());
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw StorageError("write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw StorageError("cannot move " + tmp.string() + " into place: " + ec.message());
}

void atomic_write(const std::filesystem::path& path, const std::string& text) {
    atomic_write(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

ModelFileInfo save_model(const ParamSet& params, const std::filesystem::path& path) {
    const auto bytes = encode_model(params);
    atomic_write(path, bytes);
    Digest d{};
    std::memcpy(d.data(), bytes.data() + bytes.size() - 32, 32);
    return {path, kModelFileVersion, static_cast<std::uint32_t>(params.size()), to_hex(d)};
}

ParamSet load_model(const std::filesystem::path& path) { return decode_model(read_file(path)); }

double time_ratio(double t_generated, double t_trained) {
    if (!(t_trained > 0.0)) throw UndefinedRatioError("time ratio undefined for a training time of " + std::to_string(t_trained));
    return t_generated / t_trained;
}

namespace {

nlohmann::json opt(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

std::optional<double> opt_from(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<double>();
}

std::string trailer_hash(const std::filesystem::path& p) {
    const auto bytes = read_file(p);
    if (bytes.size() < 32) throw CorruptionError(p.string() + " is too short to hold a hash");
    Digest d{};
    std::memcpy(d.data(), bytes.data() + bytes.size() - 32, 32);
    return to_hex(d);
}

} // namespace

nlohmann::json PoolManifest::to_json() const {
    nlohmann::json members_json = nlohmann::json::array();
    nlohmann::json member_seconds = nlohmann::json::object();
    for (const auto& m : members) {
        members_json.push_back({{"id", m.id},
                                {"file", m.file},
                                {"hash", m.hash},
                                {"accuracy", m.accuracy},
                                {"test_accuracy", opt(m.test_accuracy)},
                                {"quality", opt(m.quality)},
                                {"diversity", opt(m.diversity)},
                                {"fitness", opt(m.fitness)},
                                {"lineage", {{"op", m.op}, {"parents", m.parents}}}});
        member_seconds[std::to_string(m.id)] = m.seconds;
    }
    nlohmann::json timings = {{"time_generated", time_generated},
                              {"time_trained", opt(time_trained)},
                              {"ratio_time", time_trained && *time_trained > 0.0 ? nlohmann::json(time_generated / *time_trained)
                                                                                 : nlohmann::json(nullptr)},
                              {"member_seconds", member_seconds}};
    return {{"pool_id", pool_id},
            {"hash_algorithm", kHashAlgorithm},
            {"base",
             {{"file", base_file}, {"hash", base_hash}, {"accuracy", base_accuracy}, {"test_accuracy", opt(base_test_accuracy)}}},
            {"config", config},
            {"attempts", attempts},
            {"member_count", members.size()},
            {"members", members_json},
            {"timings", timings}};
}

PoolManifest PoolManifest::from_json(const nlohmann::json& j) {
    try {
        PoolManifest m;
        m.pool_id = j.at("pool_id").get<std::string>();
        m.base_file = j.at("base").at("file").get<std::string>();
        m.base_hash = j.at("base").at("hash").get<std::string>();
        m.base_accuracy = j.at("base").at("accuracy").get<double>();
        m.base_test_accuracy = opt_from(j.at("base"), "test_accuracy");
        m.config = j.value("config", nlohmann::json::object());
        m.attempts = j.value("attempts", std::size_t{0});
        const auto& timings = j.at("timings");
        m.time_generated = timings.value("time_generated", 0.0);
        m.time_trained = opt_from(timings, "time_trained");
        for (const auto& mj : j.at("members")) {
            ManifestMember mm;
            mm.id = mj.at("id").get<std::uint64_t>();
            mm.file = mj.at("file").get<std::string>();
            mm.hash = mj.at("hash").get<std::string>();
            mm.accuracy = mj.at("accuracy").get<double>();
            mm.test_accuracy = opt_from(mj, "test_accuracy");
            mm.quality = opt_from(mj, "quality");
            mm.diversity = opt_from(mj, "diversity");
            mm.fitness = opt_from(mj, "fitness");
            mm.op = mj.at("lineage").at("op").get<std::string>();
            mm.parents = mj.at("lineage").at("parents").get<std::vector<std::uint64_t>>();
            const auto key = std::to_string(mm.id);
            if (timings.contains("member_seconds") && timings["member_seconds"].contains(key))
                mm.seconds = timings["member_seconds"][key].get<double>();
            m.members.push_back(std::move(mm));
        }
        if (j.contains("member_count") && j["member_count"].get<std::size_t>() != m.members.size())
            throw CorruptionError("manifest member_count disagrees with its member list");
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw CorruptionError(std::string("malformed pool manifest: ") + e.what());
    }
}

void write_manifest(const PoolManifest& m, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    atomic_write(dir / "manifest.json", m.to_json().dump(2) + "\n");
}

PoolManifest read_manifest(const std::filesystem::path& dir) {
    const auto bytes = read_file(dir / "manifest.json");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(bytes.begin(), bytes.end());
    } catch (const nlohmann::json::exception& e) {
        throw CorruptionError(std::string("manifest is not valid JSON: ") + e.what());
    }
    return PoolManifest::from_json(j);
}

void verify_manifest(const PoolManifest& m, const std::filesystem::path& dir) {
    for (const auto& mm : m.members) {
        const auto p = dir / mm.file;
        if (!std::filesystem::exists(p)) throw StorageError("manifest references missing file " + p.string());
        if (trailer_hash(p) != mm.hash) throw CorruptionError("hash mismatch for " + p.string());
        (void)load_model(p); // trailer must also match the content
    }
}

} // namespace mge
