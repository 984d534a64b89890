#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "ctbench/image.hpp"

namespace testutil {

/// Fresh empty scratch directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& tag) {
    const auto p = std::filesystem::temp_directory_path() / ("ctbench_" + tag);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

inline ctbench::Image noise_image(int w, int h, double spacing, double mean, double sigma,
                                  std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist(mean, sigma);
    ctbench::Image img = ctbench::make_image(w, h, spacing);
    for (auto& v : img.data) v = static_cast<float>(dist(rng));
    return img;
}

inline ctbench::Image const_image(int w, int h, double spacing, float value) {
    ctbench::Image img = ctbench::make_image(w, h, spacing);
    for (auto& v : img.data) v = value;
    return img;
}

} // namespace testutil
