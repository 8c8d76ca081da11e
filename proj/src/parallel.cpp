#include "photonpano/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace photonpano::parallel {

namespace {
std::atomic<int> g_workers_override{0};
}

void set_workers(int n) { g_workers_override.store(n < 0 ? 0 : n); }

int worker_count() {
    int n = g_workers_override.load();
    if (n == 0) {
        if (const char* env = std::getenv("PHOTONPANO_THREADS")) {
            n = std::atoi(env);
            if (n < 0) n = 0;
        }
    }
    if (n == 0) {
        unsigned hw = std::thread::hardware_concurrency();
        n = hw == 0 ? 1 : static_cast<int>(hw);
    }
    return n;
}

void for_each_index(int64_t n, const std::function<void(int64_t)>& fn) {
    if (n <= 0) return;
    int workers = worker_count();
    if (workers > n) workers = static_cast<int>(n);
    if (workers <= 1) {
        for (int64_t i = 0; i < n; ++i) fn(i);
        return;
    }

    std::atomic<int64_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;

    auto body = [&]() {
        for (;;) {
            int64_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers) - 1);
    for (int t = 1; t < workers; ++t) pool.emplace_back(body);
    body();
    for (auto& th : pool) th.join();

    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace photonpano::parallel
