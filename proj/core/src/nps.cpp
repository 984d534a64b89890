#include <cmath>
#include <complex>
#include <vector>

#include "ctbench/bench.hpp"
#include "ctbench/errors.hpp"
#include "ctbench/fft.hpp"
#include "ctbench/image.hpp"

namespace ctbench {

// Least-squares plane fit over a square grid. On the centered coordinates the
// basis {1, x - xc, y - yc} is orthogonal, so the coefficients decouple.
static void detrend_plane(std::vector<double>& roi, int n) {
    const double c = (n - 1) / 2.0;
    double s0 = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0;
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            const double v = roi[static_cast<std::size_t>(y) * n + x];
            s0 += v;
            sx += v * (x - c);
            sy += v * (y - c);
        }
    for (int x = 0; x < n; ++x) sxx += (x - c) * (x - c);
    sxx *= n; // sum over the full grid, same for both axes
    const double a = s0 / (static_cast<double>(n) * n);
    const double bx = sx / sxx;
    const double by = sy / sxx;
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x)
            roi[static_cast<std::size_t>(y) * n + x] -= a + bx * (x - c) + by * (y - c);
}

NpsResult nps_estimate(const std::vector<Image>& realizations, const Roi& roi) {
    const int n_real = static_cast<int>(realizations.size());
    if (n_real < 2) throw DataError("nps needs at least 2 realizations");
    if (roi.w != roi.h) throw DataError("nps roi must be square");
    const Image& first = realizations[0];
    validate_image(first);
    for (const auto& img : realizations)
        if (!img.same_shape(first)) throw DataError("realizations must share dimensions");
    if (roi.x0 < 0 || roi.y0 < 0 || roi.w <= 1 || roi.x0 + roi.w > first.width ||
        roi.y0 + roi.h > first.height)
        throw DataError("roi exceeds image bounds");

    const int n = roi.w;
    const std::size_t npx = static_cast<std::size_t>(n) * n;
    const double dx = first.pixel_spacing_mm;

    // Ensemble mean over the ROI.
    std::vector<double> mean(npx, 0.0);
    for (const auto& img : realizations)
        for (int y = 0; y < n; ++y)
            for (int x = 0; x < n; ++x)
                mean[static_cast<std::size_t>(y) * n + x] += img.at(roi.x0 + x, roi.y0 + y);
    for (auto& v : mean) v /= n_real;

    // Mean |DFT|^2 of the scaled, detrended noise images.
    const double unbias = std::sqrt(static_cast<double>(n_real) / (n_real - 1.0));
    std::vector<double> power(npx, 0.0);
    std::vector<double> noise(npx);
    std::vector<std::complex<double>> buf(npx);
    for (const auto& img : realizations) {
        for (int y = 0; y < n; ++y)
            for (int x = 0; x < n; ++x) {
                const std::size_t i = static_cast<std::size_t>(y) * n + x;
                noise[i] = (img.at(roi.x0 + x, roi.y0 + y) - mean[i]) * unbias;
            }
        detrend_plane(noise, n);
        for (std::size_t i = 0; i < npx; ++i) buf[i] = noise[i];
        fft2_inplace(buf, n, n, false);
        for (std::size_t i = 0; i < npx; ++i) power[i] += std::norm(buf[i]);
    }
    const double scale = dx * dx / (npx * static_cast<double>(n_real));
    for (auto& v : power) v *= scale;

    NpsResult nps;
    nps.roi_size = n;
    nps.n_realizations = n_real;
    nps.delta_f = 1.0 / (n * dx);

    // fftshift so DC sits at (n/2, n/2).
    nps.nps2d.assign(npx, 0.0);
    const int half = n / 2;
    for (int v = 0; v < n; ++v)
        for (int u = 0; u < n; ++u) {
            const int us = (u + half) % n;
            const int vs = (v + half) % n;
            nps.nps2d[static_cast<std::size_t>(vs) * n + us] =
                power[static_cast<std::size_t>(v) * n + u];
        }

    // Radial average over annuli centered at k * delta_f; DC (k = 0) is kept
    // in nps2d for integrals but left out of the curve.
    std::vector<double> bin_sum;
    std::vector<int> bin_count;
    for (int v = 0; v < n; ++v) {
        const double fv = (v <= half ? v : v - n) * nps.delta_f;
        for (int u = 0; u < n; ++u) {
            const double fu = (u <= half ? u : u - n) * nps.delta_f;
            const int k = static_cast<int>(std::floor(std::hypot(fu, fv) / nps.delta_f + 0.5));
            if (k >= static_cast<int>(bin_sum.size())) {
                bin_sum.resize(k + 1, 0.0);
                bin_count.resize(k + 1, 0);
            }
            bin_sum[k] += power[static_cast<std::size_t>(v) * n + u];
            bin_count[k] += 1;
        }
    }
    for (std::size_t k = 1; k < bin_sum.size(); ++k) {
        if (bin_count[k] == 0) continue;
        nps.radial_freqs.push_back(k * nps.delta_f);
        nps.radial_values.push_back(bin_sum[k] / bin_count[k]);
    }
    return nps;
}

double nps_integral(const NpsResult& nps) {
    double s = 0.0;
    for (double v : nps.nps2d) s += v;
    return s * nps.delta_f * nps.delta_f;
}

} // namespace ctbench
