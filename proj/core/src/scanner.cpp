#include "ctbench/scanner.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <random>

#include <nlohmann/json.hpp>

#include "ctbench/errors.hpp"
#include "ctbench/fft.hpp"
#include "ctbench/io.hpp"
#include "ctbench/parallel.hpp"

namespace ctbench {

void validate_geometry(const ScanGeometry& g) {
    if (g.n_views < 1) throw DataError("n_views must be >= 1");
    if (g.n_detectors < 1) throw DataError("n_detectors must be >= 1");
    if (!(g.detector_spacing_mm > 0.0)) throw DataError("detector spacing must be positive");
    if (!(g.i0 > 0.0)) throw DataError("i0 must be positive");
}

void validate_sinogram(const Sinogram& s) {
    if (s.n_views < 1 || s.n_detectors < 1) throw DataError("sinogram dimensions must be positive");
    if (!(s.detector_spacing_mm > 0.0)) throw DataError("detector spacing must be positive");
    if (s.data.size() != static_cast<std::size_t>(s.n_views) * s.n_detectors)
        throw DataError("sinogram buffer size does not match dimensions");
    for (float v : s.data)
        if (!std::isfinite(v)) throw DataError("sinogram contains non-finite values");
}

Image hu_to_mu(const Image& hu, double mu_water_per_mm) {
    validate_image(hu);
    if (!(mu_water_per_mm > 0.0)) throw DataError("mu_water must be positive");
    Image mu = hu;
    for (auto& v : mu.data)
        v = std::max(0.0f, static_cast<float>(mu_water_per_mm * (1.0 + v / 1000.0)));
    return mu;
}

Image mu_to_hu(const Image& mu, double mu_water_per_mm) {
    validate_image(mu);
    if (!(mu_water_per_mm > 0.0)) throw DataError("mu_water must be positive");
    Image hu = mu;
    for (auto& v : hu.data)
        v = static_cast<float>(1000.0 * (v / mu_water_per_mm - 1.0));
    return hu;
}

Sinogram forward_project(const Image& mu, const ScanGeometry& g) {
    validate_image(mu);
    validate_geometry(g);
    Sinogram sino;
    sino.n_views = g.n_views;
    sino.n_detectors = g.n_detectors;
    sino.detector_spacing_mm = g.detector_spacing_mm;
    sino.data.assign(static_cast<std::size_t>(g.n_views) * g.n_detectors, 0.0f);

    const double spacing = mu.pixel_spacing_mm;
    const double step = spacing / 2.0;
    const double cx = (mu.width - 1) / 2.0;
    const double cy = (mu.height - 1) / 2.0;
    // Rays are sampled over the circle that circumscribes the image.
    const double reach = 0.5 * std::hypot(mu.width * spacing, mu.height * spacing);
    const int n_steps = static_cast<int>(std::floor(2.0 * reach / step)) + 1;
    const double det_half = (g.n_detectors - 1) / 2.0;

    parallel_for(0, g.n_views, [&](std::int64_t v0, std::int64_t v1) {
        for (std::int64_t v = v0; v < v1; ++v) {
            const double theta = static_cast<double>(v) * M_PI / g.n_views;
            const double nx = std::cos(theta), ny = std::sin(theta); // detector axis
            const double dx = -ny, dy = nx;                          // ray direction
            for (int d = 0; d < g.n_detectors; ++d) {
                const double t = (d - det_half) * g.detector_spacing_mm;
                double acc = 0.0;
                for (int i = 0; i < n_steps; ++i) {
                    const double s = -reach + i * step;
                    const double px = (t * nx + s * dx) / spacing + cx;
                    const double py = (t * ny + s * dy) / spacing + cy;
                    acc += sample_bilinear(mu, px, py);
                }
                sino.at(static_cast<int>(v), d) = static_cast<float>(acc * step);
            }
        }
    });
    return sino;
}

Sinogram add_poisson_noise(const Sinogram& sino, const ScanGeometry& g, double dose,
                           std::uint64_t seed) {
    validate_sinogram(sino);
    validate_geometry(g);
    if (!(dose > 0.0) || dose > 1.0) throw DataError("dose must be in (0, 1]");
    const double counts0 = dose * g.i0;
    Sinogram out = sino;
    std::mt19937_64 rng(seed);
    // Fixed row-major order: the same seed always yields the same noise.
    for (auto& p : out.data) {
        const double mean = counts0 * std::exp(-static_cast<double>(p));
        std::poisson_distribution<long long> poisson(mean);
        const long long n = poisson(rng);
        p = static_cast<float>(std::log(counts0) - std::log(static_cast<double>(std::max(n, 1LL))));
    }
    return out;
}

// Band-limited ramp filter built in the spatial domain (avoids the DC bias of
// sampling |f| directly), optionally rolled off by a Hann window.
static std::vector<double> build_filter(ReconKernel kernel, int padded, double tau) {
    std::vector<std::complex<double>> h(padded, 0.0);
    h[0] = 1.0 / (4.0 * tau * tau);
    for (int j = 1; j <= padded / 2; ++j) {
        double v = 0.0;
        if (j % 2 == 1) v = -1.0 / (M_PI * M_PI * j * j * tau * tau);
        h[j] = v;
        h[padded - j] = v;
    }
    fft_inplace(h, false);
    std::vector<double> response(padded);
    const double f_nyq = 1.0 / (2.0 * tau);
    for (int k = 0; k < padded; ++k) {
        double H = h[k].real(); // real and >= 0 up to rounding
        if (kernel == ReconKernel::smooth) {
            const int kk = k <= padded / 2 ? k : padded - k;
            const double f = kk / (padded * tau);
            H *= 0.5 * (1.0 + std::cos(M_PI * std::min(f / f_nyq, 1.0)));
        }
        response[k] = H;
    }
    return response;
}

std::vector<double> filter_response(ReconKernel kernel, int n, double detector_spacing_mm) {
    if (n < 2) throw DataError("filter_response needs n >= 2");
    if (!(detector_spacing_mm > 0.0)) throw DataError("detector spacing must be positive");
    const int padded = next_pow2(8 * n);
    const auto full = build_filter(kernel, padded, detector_spacing_mm);
    // Resample bins 0..padded/2 (which span [0, Nyquist]) onto n points.
    std::vector<double> out(n);
    for (int i = 0; i < n; ++i) {
        const double pos = static_cast<double>(i) / (n - 1) * (padded / 2);
        const int k = static_cast<int>(std::floor(pos));
        const double f = pos - k;
        const double a = full[k];
        const double b = full[std::min(k + 1, padded / 2)];
        out[i] = (1.0 - f) * a + f * b;
    }
    return out;
}

Image fbp(const Sinogram& sino, const ScanGeometry& g, int width, int height,
          double pixel_spacing_mm, double mu_water_per_mm) {
    validate_sinogram(sino);
    validate_geometry(g);
    if (sino.n_views != g.n_views || sino.n_detectors != g.n_detectors)
        throw DataError("sinogram does not match geometry");
    if (width <= 0 || height <= 0 || !(pixel_spacing_mm > 0.0))
        throw DataError("bad reconstruction grid");

    const int n_det = sino.n_detectors;
    const double tau = sino.detector_spacing_mm;
    const int padded = next_pow2(2 * n_det);
    const auto filter = build_filter(g.kernel, padded, tau);

    // Filter every view: q = tau * (p ⊛ h), via padded FFTs.
    std::vector<float> filtered(static_cast<std::size_t>(g.n_views) * n_det);
    parallel_for(0, g.n_views, [&](std::int64_t v0, std::int64_t v1) {
        std::vector<std::complex<double>> row(padded);
        for (std::int64_t v = v0; v < v1; ++v) {
            std::fill(row.begin(), row.end(), std::complex<double>(0.0));
            for (int d = 0; d < n_det; ++d) row[d] = sino.at(static_cast<int>(v), d);
            fft_inplace(row, false);
            for (int k = 0; k < padded; ++k) row[k] *= filter[k];
            fft_inplace(row, true);
            for (int d = 0; d < n_det; ++d)
                filtered[v * n_det + d] = static_cast<float>(row[d].real() * tau);
        }
    });

    Image mu = make_image(width, height, pixel_spacing_mm);
    const double cx = (width - 1) / 2.0;
    const double cy = (height - 1) / 2.0;
    const double det_half = (n_det - 1) / 2.0;
    const double weight = M_PI / g.n_views;

    std::vector<double> cos_t(g.n_views), sin_t(g.n_views);
    for (int v = 0; v < g.n_views; ++v) {
        const double theta = v * M_PI / g.n_views;
        cos_t[v] = std::cos(theta);
        sin_t[v] = std::sin(theta);
    }

    parallel_for(0, height, [&](std::int64_t y0, std::int64_t y1) {
        for (std::int64_t y = y0; y < y1; ++y) {
            const double ym = (y - cy) * pixel_spacing_mm;
            for (int x = 0; x < width; ++x) {
                const double xm = (x - cx) * pixel_spacing_mm;
                double acc = 0.0;
                for (int v = 0; v < g.n_views; ++v) {
                    const double t = xm * cos_t[v] + ym * sin_t[v];
                    const double u = t / tau + det_half;
                    const int d = static_cast<int>(std::floor(u));
                    if (d < -1 || d >= n_det) continue;
                    const double f = u - d;
                    const double a = d >= 0 ? filtered[static_cast<std::size_t>(v) * n_det + d] : 0.0;
                    const double b = d + 1 < n_det ? filtered[static_cast<std::size_t>(v) * n_det + d + 1] : 0.0;
                    acc += (1.0 - f) * a + f * b;
                }
                mu.at(x, static_cast<int>(y)) = static_cast<float>(acc * weight);
            }
        }
    });
    return mu_to_hu(mu, mu_water_per_mm);
}

Image simulate_scan(const Image& phantom_hu, const ScanGeometry& g, double dose,
                    std::uint64_t seed, double mu_water_per_mm) {
    const Sinogram clean = forward_project(hu_to_mu(phantom_hu, mu_water_per_mm), g);
    const Sinogram noisy = add_poisson_noise(clean, g, dose, seed);
    return fbp(noisy, g, phantom_hu.width, phantom_hu.height, phantom_hu.pixel_spacing_mm,
               mu_water_per_mm);
}

Sinogram read_sinogram(const std::filesystem::path& path) {
    std::ifstream in(sidecar_path(path));
    if (!in) throw DataError("cannot open " + sidecar_path(path).string());
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError(sidecar_path(path).string() + ": " + e.what());
    }
    Sinogram s;
    try {
        s.n_views = meta.at("n_views").get<int>();
        s.n_detectors = meta.at("n_detectors").get<int>();
        s.detector_spacing_mm = meta.at("detector_spacing_mm").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError(sidecar_path(path).string() + ": " + e.what());
    }
    if (s.n_views < 1 || s.n_detectors < 1)
        throw DataError(sidecar_path(path).string() + ": bad dimensions");
    s.data = read_f32_payload(payload_path(path),
                              static_cast<std::size_t>(s.n_views) * s.n_detectors);
    validate_sinogram(s);
    return s;
}

void write_sinogram(const Sinogram& sino, const std::filesystem::path& path) {
    validate_sinogram(sino);
    write_f32_payload(sino.data, payload_path(path));
    nlohmann::json meta{{"n_views", sino.n_views},
                        {"n_detectors", sino.n_detectors},
                        {"detector_spacing_mm", sino.detector_spacing_mm}};
    std::ofstream out(sidecar_path(path), std::ios::trunc);
    if (!out) throw DataError("cannot write " + sidecar_path(path).string());
    out << meta.dump(2) << "\n";
}

} // namespace ctbench
