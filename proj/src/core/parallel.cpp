#include "parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace glupruner {

namespace {

std::atomic<std::size_t> g_override{0};

std::size_t env_threads() {
    const char* env = std::getenv("GLUPRUNER_THREADS");
    if (env == nullptr || *env == '\0') return 0;
    try {
        const long v = std::stol(env);
        return v > 0 ? static_cast<std::size_t>(v) : 0;
    } catch (const std::exception&) {
        return 0;
    }
}

// Below this many items per worker the thread startup dominates.
constexpr std::size_t kMinChunk = 16;

} // namespace

std::size_t thread_count() {
    if (const std::size_t o = g_override.load(); o > 0) return o;
    if (const std::size_t e = env_threads(); e > 0) return e;
    return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

void set_thread_count(std::size_t threads) { g_override.store(threads); }

void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body) {
    if (n == 0) return;
    const std::size_t workers = std::min(thread_count(), std::max<std::size_t>(1, n / kMinChunk));
    if (workers <= 1) {
        body(0, n);
        return;
    }
    const std::size_t chunk = (n + workers - 1) / workers;
    std::exception_ptr first_error;
    std::mutex error_mutex;
    {
        std::vector<std::jthread> threads;
        threads.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            const std::size_t begin = w * chunk;
            const std::size_t end = std::min(n, begin + chunk);
            if (begin >= end) break;
            threads.emplace_back([&, begin, end] {
                try {
                    body(begin, end);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            });
        }
    }
    if (first_error) std::rethrow_exception(first_error);
}

} // namespace glupruner
