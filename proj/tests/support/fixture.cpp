#include "fixture.hpp"

#include "mge/train.hpp"

#include <atomic>
#include <unistd.h>

namespace mge::testing {

const DeskFixture& desk() {
    static const DeskFixture f = [] {
        DeskFixture d;
        d.data = load_datasets(d.cfg);
        d.spec = build_network(d.cfg, d.data.train);
        const auto r = train(d.spec, d.data.train, d.cfg.train);
        d.base = r.params.rounded_f32();
        d.train_seconds = r.seconds;
        return d;
    }();
    return f;
}

ScratchDir::ScratchDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("mge-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
}

ScratchDir::~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
}

} // namespace mge::testing
