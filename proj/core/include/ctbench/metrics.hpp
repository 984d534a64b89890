#pragma once

#include <string>

#include "ctbench/image.hpp"

namespace ctbench {

/// Default dynamic range for HU-valued images (air to dense bone).
inline constexpr double kDefaultDataRange = 2000.0;

double rmse(const Image& a, const Image& b);

/// 20 * log10(data_range / rmse); +infinity for identical images.
double psnr(const Image& a, const Image& b, double data_range = kDefaultDataRange);

struct SsimOptions {
    int window = 11;          ///< Gaussian window size (odd).
    double sigma = 1.5;       ///< Gaussian window sigma.
    double k1 = 0.01;
    double k2 = 0.03;
    double data_range = kDefaultDataRange;
};

/// Mean SSIM over the valid (fully-windowed) region. Both images are first
/// shifted by the mean of their two global means, which makes the score exactly
/// invariant to adding one constant to both inputs.
double ssim(const Image& a, const Image& b, const SsimOptions& opt = {});

/// Multi-scale SSIM, 5 scales with 2x mean-pool downsampling between scales.
/// Scales that no longer fit the window are dropped and the exponent weights
/// renormalized, so a single-scale evaluation reduces to ssim().
double ms_ssim(const Image& a, const Image& b, const SsimOptions& opt = {});

struct GlobalMetrics {
    double rmse = 0.0;
    double psnr = 0.0;
    double ssim = 0.0;
    double ms_ssim = 0.0;
};

GlobalMetrics compute_global_metrics(const Image& test, const Image& reference,
                                     double data_range = kDefaultDataRange);

/// JSON object with keys rmse/psnr/ssim/ms_ssim; infinities serialize as "inf".
std::string metrics_to_json(const GlobalMetrics& m);

} // namespace ctbench
