#include "mge/errors.hpp"

namespace mge {

const char* error_kind_name(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::invalid_input: return "invalid_input";
    case ErrorKind::config: return "config";
    case ErrorKind::degenerate_spectrum: return "degenerate_spectrum";
    case ErrorKind::structural: return "structural";
    case ErrorKind::training_diverged: return "training_diverged";
    case ErrorKind::format: return "format";
    case ErrorKind::generation_failed: return "generation_failed";
    case ErrorKind::storage: return "storage";
    case ErrorKind::corruption: return "corruption";
    case ErrorKind::unsupported_version: return "unsupported_version";
    case ErrorKind::undefined_ratio: return "undefined_ratio";
    }
    return "unknown";
}

int exit_code(ErrorKind kind) noexcept { return 3 + static_cast<int>(kind); }

} // namespace mge
