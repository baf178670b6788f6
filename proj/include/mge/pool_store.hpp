#pragma once

// On-disk model files and pool manifests.
//
// Model file layout (all integers little-endian u32):
//   "MGEM" | version | tensor count |
//   per tensor: name length | name bytes | rank | dims[rank] | f32 LE payload |
//   SHA-256 of every preceding byte (32 bytes)

#include "mge/network.hpp"

#include "json.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace mge {

inline constexpr std::uint32_t kModelFileVersion = 1;
inline constexpr const char* kHashAlgorithm = "sha256";

using Digest = std::array<std::uint8_t, 32>;

Digest sha256(std::span<const std::uint8_t> bytes);
std::string to_hex(const Digest& d);
/// Hex SHA-256 of a whole file. Throws StorageError if unreadable.
std::string file_sha256(const std::filesystem::path& path);

/// Serialized bytes of `params` (values rounded to float32). Throws
/// InvalidInputError for empty/non-finite tensors or empty names.
std::vector<std::uint8_t> encode_model(const ParamSet& params);

/// Inverse of encode_model. Throws CorruptionError on truncation or a hash
/// mismatch, UnsupportedVersionError on an unknown version.
ParamSet decode_model(std::span<const std::uint8_t> bytes);

struct ModelFileInfo {
    std::filesystem::path path;
    std::uint32_t version = kModelFileVersion;
    std::uint32_t tensors = 0;
    std::string hash; // hex digest stored in the file trailer
};

/// Writes atomically (temp file + rename). Throws StorageError on I/O failure.
ModelFileInfo save_model(const ParamSet& params, const std::filesystem::path& path);
ParamSet load_model(const std::filesystem::path& path);

/// Time_generated / Time_trained. Throws UndefinedRatioError if t_train <= 0.
double time_ratio(double t_generated, double t_trained);

struct ManifestMember {
    std::uint64_t id = 0;
    std::string file; // relative to the manifest directory
    std::string hash;
    double accuracy = 0.0; // validation accuracy the acceptance test saw
    std::optional<double> test_accuracy;
    std::optional<double> quality;
    std::optional<double> diversity;
    std::optional<double> fitness;
    std::string op = "seed";
    std::vector<std::uint64_t> parents;
    double seconds = 0.0; // wall-clock, serialized under "timings"
};

/// Pool bookkeeping. Everything wall-clock lives in the "timings" object so
/// determinism checks can drop that one key.
struct PoolManifest {
    std::string pool_id;
    std::string base_file;
    std::string base_hash;
    double base_accuracy = 0.0;
    std::optional<double> base_test_accuracy;
    nlohmann::json config;  // echo of the run configuration (with defaults)
    std::size_t attempts = 0;
    std::vector<ManifestMember> members;
    double time_generated = 0.0;
    std::optional<double> time_trained;

    nlohmann::json to_json() const;
    static PoolManifest from_json(const nlohmann::json& j);
};

/// Writes `manifest.json` in `dir` atomically.
void write_manifest(const PoolManifest& m, const std::filesystem::path& dir);
PoolManifest read_manifest(const std::filesystem::path& dir);

/// Every member file exists and its trailer hash matches the manifest; the
/// member count matches. Throws CorruptionError/StorageError otherwise.
void verify_manifest(const PoolManifest& m, const std::filesystem::path& dir);

/// Writes bytes to `path` through a sibling temp file and rename.
void atomic_write(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void atomic_write(const std::filesystem::path& path, const std::string& text);

} // namespace mge
