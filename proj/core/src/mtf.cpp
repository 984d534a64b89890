#include <cmath>
#include <complex>
#include <vector>

#include "ctbench/bench.hpp"
#include "ctbench/errors.hpp"
#include "ctbench/fft.hpp"

namespace ctbench {

MtfCurve mtf_from_disk(const Image& img, const DiskInsert& insert, double background_hu) {
    validate_image(img);
    if (std::abs(insert.hu - background_hu) < 20.0)
        throw DataError("insert contrast below 20 HU: MTF is ill-posed in noise");
    const double spacing = img.pixel_spacing_mm;
    const double cx = insert.cx_mm / spacing + (img.width - 1) / 2.0;
    const double cy = insert.cy_mm / spacing + (img.height - 1) / 2.0;
    const double reach = 2.0 * insert.radius_mm; // measurement annulus radius
    const double reach_px = reach / spacing;
    if (cx - reach_px < 0 || cy - reach_px < 0 || cx + reach_px > img.width - 1 ||
        cy + reach_px > img.height - 1)
        throw DataError("disk measurement region clipped by image border");

    // Oversampled edge-spread function: radial bins of width spacing/8.
    const double bin_w = spacing / 8.0;
    const int n_bins = static_cast<int>(std::ceil(reach / bin_w));
    std::vector<double> sum(n_bins, 0.0);
    std::vector<int> count(n_bins, 0);
    const int x0 = static_cast<int>(std::floor(cx - reach_px));
    const int x1 = static_cast<int>(std::ceil(cx + reach_px));
    const int y0 = static_cast<int>(std::floor(cy - reach_px));
    const int y1 = static_cast<int>(std::ceil(cy + reach_px));
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
            const double rho = std::hypot(x - cx, y - cy) * spacing;
            if (rho >= reach) continue;
            const int b = static_cast<int>(rho / bin_w);
            sum[b] += img.at(x, y);
            count[b] += 1;
        }

    std::vector<double> esf(n_bins, 0.0);
    for (int b = 0; b < n_bins; ++b)
        if (count[b] > 0) esf[b] = sum[b] / count[b];
    // Fill empty bins by linear interpolation between populated neighbors.
    int prev = -1;
    for (int b = 0; b < n_bins; ++b) {
        if (count[b] == 0) continue;
        if (prev < 0) {
            for (int j = 0; j < b; ++j) esf[j] = esf[b];
        } else if (prev + 1 < b) {
            for (int j = prev + 1; j < b; ++j) {
                const double f = static_cast<double>(j - prev) / (b - prev);
                esf[j] = (1.0 - f) * esf[prev] + f * esf[b];
            }
        }
        prev = b;
    }
    if (prev < 0) throw DataError("no pixels in MTF measurement region");
    for (int j = prev + 1; j < n_bins; ++j) esf[j] = esf[prev];

    // 3-bin moving average (shrinks to 2 samples at the ends).
    std::vector<double> smooth(n_bins);
    for (int b = 0; b < n_bins; ++b) {
        double s = esf[b];
        int n = 1;
        if (b > 0) { s += esf[b - 1]; ++n; }
        if (b + 1 < n_bins) { s += esf[b + 1]; ++n; }
        smooth[b] = s / n;
    }

    // Central-difference line-spread function, Hann-tapered.
    std::vector<std::complex<double>> lsf(n_bins, 0.0);
    for (int b = 0; b < n_bins; ++b) {
        double d;
        if (b == 0)
            d = (smooth[1] - smooth[0]) / bin_w;
        else if (b == n_bins - 1)
            d = (smooth[b] - smooth[b - 1]) / bin_w;
        else
            d = (smooth[b + 1] - smooth[b - 1]) / (2.0 * bin_w);
        const double hann = 0.5 * (1.0 - std::cos(2.0 * M_PI * b / (n_bins - 1)));
        lsf[b] = d * hann;
    }

    fft_inplace(lsf, false);
    const double dc = std::abs(lsf[0]);
    if (!(dc > 0.0)) throw NumericalError("MTF normalization failed: zero DC response");

    const double f_nyq = 1.0 / (2.0 * spacing);
    MtfCurve mtf;
    for (int k = 0; k < n_bins / 2 + 1; ++k) {
        const double f = k / (n_bins * bin_w);
        if (f > f_nyq + 1e-12) break;
        mtf.freqs.push_back(f);
        mtf.values.push_back(std::abs(lsf[k]) / dc);
    }

    // First downward 0.5 crossing; curves that never drop report the last
    // measured frequency.
    mtf.mtf50 = mtf.freqs.back();
    for (std::size_t k = 1; k < mtf.values.size(); ++k) {
        if (mtf.values[k - 1] >= 0.5 && mtf.values[k] < 0.5) {
            const double f = (mtf.values[k - 1] - 0.5) / (mtf.values[k - 1] - mtf.values[k]);
            mtf.mtf50 = mtf.freqs[k - 1] + f * (mtf.freqs[k] - mtf.freqs[k - 1]);
            break;
        }
    }
    return mtf;
}

} // namespace ctbench
