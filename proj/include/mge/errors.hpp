#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace mge {

// Each error kind maps onto one CLI exit code (see tools/mge_cli.cpp).
enum class ErrorKind {
    invalid_input,
    config,
    degenerate_spectrum,
    structural,
    training_diverged,
    format,
    generation_failed,
    storage,
    corruption,
    unsupported_version,
    undefined_ratio,
};

const char* error_kind_name(ErrorKind kind) noexcept;

/// Process exit status for an error kind. 0, 1 (unexpected failure) and 2
/// (command-line usage) are never returned.
int exit_code(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

struct InvalidInputError : Error {
    explicit InvalidInputError(const std::string& what) : Error(ErrorKind::invalid_input, what) {}
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& what) : Error(ErrorKind::config, what) {}
};

struct DegenerateSpectrumError : Error {
    explicit DegenerateSpectrumError(const std::string& what)
        : Error(ErrorKind::degenerate_spectrum, what) {}
};

struct StructuralError : Error {
    explicit StructuralError(const std::string& what) : Error(ErrorKind::structural, what) {}
};

struct TrainingDivergedError : Error {
    TrainingDivergedError(const std::string& what, int epoch)
        : Error(ErrorKind::training_diverged, what), epoch(epoch) {}
    int epoch;
};

// Malformed external file (IDX). Carries the byte offset where parsing stopped.
struct FormatError : Error {
    FormatError(const std::string& what, std::uint64_t offset)
        : Error(ErrorKind::format, what + " (at byte offset " + std::to_string(offset) + ")"),
          offset(offset) {}
    std::uint64_t offset;
};

struct GenerationFailedError : Error {
    GenerationFailedError(const std::string& what, std::size_t attempts, std::size_t accepted)
        : Error(ErrorKind::generation_failed, what), attempts(attempts), accepted(accepted) {}
    std::size_t attempts;
    std::size_t accepted;
};

struct StorageError : Error {
    explicit StorageError(const std::string& what) : Error(ErrorKind::storage, what) {}
};

struct CorruptionError : Error {
    explicit CorruptionError(const std::string& what) : Error(ErrorKind::corruption, what) {}
};

struct UnsupportedVersionError : Error {
    UnsupportedVersionError(const std::string& what, std::uint32_t version)
        : Error(ErrorKind::unsupported_version, what), version(version) {}
    std::uint32_t version;
};

struct UndefinedRatioError : Error {
    explicit UndefinedRatioError(const std::string& what) : Error(ErrorKind::undefined_ratio, what) {}
};

} // namespace mge
