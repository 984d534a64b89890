#include "ctbench/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <thread>
#include <vector>

namespace ctbench {

namespace {
std::atomic<int> g_thread_count{0}; // 0 = hardware concurrency
}

void set_thread_count(int n) { g_thread_count.store(std::max(0, n)); }

int thread_count() {
    const int n = g_thread_count.load();
    if (n > 0) return n;
    const unsigned hc = std::thread::hardware_concurrency();
    return hc > 0 ? static_cast<int>(hc) : 1;
}

void parallel_for(std::int64_t begin, std::int64_t end,
                  const std::function<void(std::int64_t, std::int64_t)>& fn) {
    const std::int64_t total = end - begin;
    if (total <= 0) return;
    const int workers = static_cast<int>(std::min<std::int64_t>(thread_count(), total));
    if (workers <= 1) {
        fn(begin, end);
        return;
    }
    const std::int64_t chunk = (total + workers - 1) / workers;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        const std::int64_t b = begin + w * chunk;
        const std::int64_t e = std::min(end, b + chunk);
        if (b >= e) break;
        pool.emplace_back([&fn, b, e] { fn(b, e); });
    }
    for (auto& t : pool) t.join();
}

} // namespace ctbench
