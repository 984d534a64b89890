#include <cstdio>
#include <cstdlib>

#include "ctbench/harness.hpp"
#include "ctbench/io.hpp"

namespace ctbench {

namespace {

// FNV-1a, stable across runs (std::hash makes no such promise).
std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

} // namespace

SimulationCache::SimulationCache(std::filesystem::path dir) : dir_(std::move(dir)) {
    if (!dir_.empty()) std::filesystem::create_directories(dir_);
}

Image SimulationCache::get_or_compute(const std::string& key,
                                      const std::function<Image()>& compute) {
    std::lock_guard<std::mutex> lock(mu_);
    if (auto it = mem_.find(key); it != mem_.end()) {
        ++hits_;
        return it->second;
    }
    if (!dir_.empty()) {
        char name[24];
        std::snprintf(name, sizeof name, "%016llx",
                      static_cast<unsigned long long>(fnv1a(key)));
        const auto path = dir_ / (std::string(name) + ".f32");
        if (std::filesystem::exists(path)) {
            ++hits_;
            Image img = read_image(path);
            mem_.emplace(key, img);
            return img;
        }
        ++misses_;
        Image img = compute();
        write_image(img, path);
        mem_.emplace(key, img);
        return img;
    }
    ++misses_;
    Image img = compute();
    mem_.emplace(key, img);
    return img;
}

std::size_t SimulationCache::hits() const {
    std::lock_guard<std::mutex> lock(mu_);
    return hits_;
}

std::size_t SimulationCache::misses() const {
    std::lock_guard<std::mutex> lock(mu_);
    return misses_;
}

void SimulationCache::clear() {
    std::lock_guard<std::mutex> lock(mu_);
    mem_.clear();
    hits_ = 0;
    misses_ = 0;
}

std::filesystem::path env_cache_dir() {
    const char* dir = std::getenv("CTBENCH_CACHE_DIR");
    return dir ? std::filesystem::path(dir) : std::filesystem::path();
}

} // namespace ctbench
