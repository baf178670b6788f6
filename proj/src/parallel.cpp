#include "mge/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace mge {

namespace {
std::atomic<std::size_t> g_workers{1};
thread_local bool t_in_region = false;

struct RegionGuard {
    bool saved = t_in_region;
    RegionGuard() { t_in_region = true; }
    ~RegionGuard() { t_in_region = saved; }
};
} // namespace

void set_worker_count(std::size_t n) { g_workers = std::max<std::size_t>(1, n); }

std::size_t worker_count() { return g_workers.load(); }

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    // Nested calls run inline on the calling worker.
    const std::size_t threads = t_in_region ? 1 : std::min(worker_count(), n);
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto work = [&] {
        RegionGuard guard;
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        }
    };
    std::vector<std::jthread> pool;
    pool.reserve(threads - 1);
    for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(work);
    work();
    pool.clear();
    if (error) std::rethrow_exception(error);
}

} // namespace mge
