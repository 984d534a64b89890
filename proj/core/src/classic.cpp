#include <algorithm>
#include <cmath>
#include <vector>

#include "ctbench/denoiser.hpp"
#include "ctbench/errors.hpp"

namespace ctbench {

// Dual projection for min_u 0.5||u - f||^2 + lambda TV(u): the dual field p
// is iterated with step 1/4 and the solution recovered as u = f - lambda div p.
Image tv_denoise(const Image& img, double lambda, int iterations) {
    validate_image(img);
    if (!(lambda > 0.0)) throw DataError("tv lambda must be positive");
    if (iterations < 1) throw DataError("tv iterations must be >= 1");
    const int w = img.width, h = img.height;
    const std::size_t npx = img.size();
    const double tau = 0.25;

    std::vector<double> px(npx, 0.0), py(npx, 0.0), div(npx, 0.0), gx(npx), gy(npx);
    auto idx = [w](int x, int y) { return static_cast<std::size_t>(y) * w + x; };

    for (int it = 0; it < iterations; ++it) {
        // div p with the adjoint (backward-difference) convention.
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                double d = px[idx(x, y)] + py[idx(x, y)];
                if (x > 0) d -= px[idx(x - 1, y)];
                if (y > 0) d -= py[idx(x, y - 1)];
                div[idx(x, y)] = d;
            }
        // Forward gradient of (div p - f / lambda).
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const double v = div[idx(x, y)] - img.at(x, y) / lambda;
                const double vr = x + 1 < w ? div[idx(x + 1, y)] - img.at(x + 1, y) / lambda : v;
                const double vd = y + 1 < h ? div[idx(x, y + 1)] - img.at(x, y + 1) / lambda : v;
                gx[idx(x, y)] = vr - v;
                gy[idx(x, y)] = vd - v;
            }
        for (std::size_t i = 0; i < npx; ++i) {
            const double mag = std::hypot(gx[i], gy[i]);
            const double denom = 1.0 + tau * mag;
            px[i] = (px[i] + tau * gx[i]) / denom;
            py[i] = (py[i] + tau * gy[i]) / denom;
        }
    }

    Image out = img;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double d = px[idx(x, y)] + py[idx(x, y)];
            if (x > 0) d -= px[idx(x - 1, y)];
            if (y > 0) d -= py[idx(x, y - 1)];
            out.at(x, y) = static_cast<float>(img.at(x, y) - lambda * d);
        }
    return out;
}

Image gaussian_denoise(const Image& img, double sigma_px) {
    validate_image(img);
    if (sigma_px < 0.0) throw DataError("sigma must be >= 0");
    if (sigma_px == 0.0) return img;
    const int radius = static_cast<int>(std::ceil(4.0 * sigma_px));
    std::vector<double> k(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        k[i + radius] = std::exp(-i * i / (2.0 * sigma_px * sigma_px));
        sum += k[i + radius];
    }
    for (auto& v : k) v /= sum;

    const int w = img.width, h = img.height;
    // Mirror indexing (edge sample not repeated): -1 -> 1, w -> w-2.
    auto reflect = [](int i, int n) {
        while (i < 0 || i >= n) {
            if (i < 0) i = -i;
            if (i >= n) i = 2 * (n - 1) - i;
        }
        return i;
    };
    Image tmp = img, out = img;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double s = 0.0;
            for (int i = -radius; i <= radius; ++i)
                s += k[i + radius] * img.at(reflect(x + i, w), y);
            tmp.at(x, y) = static_cast<float>(s);
        }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double s = 0.0;
            for (int i = -radius; i <= radius; ++i)
                s += k[i + radius] * tmp.at(x, reflect(y + i, h));
            out.at(x, y) = static_cast<float>(s);
        }
    return out;
}

} // namespace ctbench
