#include "myinet/threading.hpp"

#include <algorithm>
#include <thread>
#include <vector>

namespace myinet {

namespace {
int g_threads = 1;
}

void set_num_threads(int n) { g_threads = std::max(1, n); }

int num_threads() { return g_threads; }

void parallel_for(int64_t begin, int64_t end, const std::function<void(int64_t)>& fn) {
    const int64_t count = end - begin;
    if (count <= 0) return;
    const int workers = static_cast<int>(std::min<int64_t>(g_threads, count));
    if (workers == 1) {
        for (int64_t i = begin; i < end; ++i) fn(i);
        return;
    }
    const int64_t chunk = (count + workers - 1) / workers;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        const int64_t lo = begin + w * chunk;
        const int64_t hi = std::min(end, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&fn, lo, hi] {
            for (int64_t i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace myinet
