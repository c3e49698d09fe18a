#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace recoeval::detail {

inline std::size_t worker_count() {
    if (const char* env = std::getenv("RECOEVAL_THREADS")) {
        try {
            const auto n = std::stoul(env);
            if (n > 0) return n;
        } catch (...) {
        }
    }
    return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

// Runs fn(index) for every index in [0, n). Each index must write only its own outputs,
// so results do not depend on the schedule. The exception from the lowest failing index
// is rethrown.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn, std::size_t grain = 16) {
    const std::size_t workers = std::min(worker_count(), (n + grain - 1) / std::max<std::size_t>(grain, 1));
    if (workers <= 1) {
        for (std::size_t k = 0; k < n; ++k) fn(k);
        return;
    }
    const std::size_t chunks = (n + grain - 1) / grain;
    std::vector<std::exception_ptr> errors(chunks);
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t c = next++; c < chunks; c = next++) {
            const std::size_t end = std::min(n, (c + 1) * grain);
            try {
                for (std::size_t k = c * grain; k < end; ++k) fn(k);
            } catch (...) {
                errors[c] = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (std::size_t t = 1; t < workers; ++t) pool.emplace_back(work);
    work();
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

}  // namespace recoeval::detail
