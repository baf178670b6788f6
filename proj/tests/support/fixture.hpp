#pragma once

#include "mge/config.hpp"

#include <filesystem>
#include <string>

namespace mge::testing {

/// The default RunConfig task: 16-D blobs, four classes, a 64-64 MLP trained
/// for ten epochs. Built once per process.
struct DeskFixture {
    RunConfig cfg;
    Datasets data;
    NetworkSpec spec;
    ParamSet base;       // float32-rounded, as a saved base model would be
    double train_seconds = 0.0;
};

const DeskFixture& desk();

/// A fresh directory under the system temp dir, removed on destruction.
class ScratchDir {
public:
    explicit ScratchDir(const std::string& tag);
    ~ScratchDir();
    ScratchDir(const ScratchDir&) = delete;
    ScratchDir& operator=(const ScratchDir&) = delete;

    const std::filesystem::path& path() const noexcept { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

} // namespace mge::testing
