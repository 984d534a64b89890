#include "ctbench/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <nlohmann/json.hpp>

#include "ctbench/errors.hpp"

namespace ctbench {

static void require_same_shape(const Image& a, const Image& b) {
    validate_image(a);
    validate_image(b);
    if (!a.same_shape(b)) throw DataError("images must share dimensions");
}

double rmse(const Image& a, const Image& b) {
    require_same_shape(a, b);
    double ss = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(a.data[i]) - b.data[i];
        ss += d * d;
    }
    return std::sqrt(ss / static_cast<double>(a.size()));
}

double psnr(const Image& a, const Image& b, double data_range) {
    if (!(data_range > 0.0)) throw DataError("data range must be positive");
    const double e = rmse(a, b);
    if (e == 0.0) return std::numeric_limits<double>::infinity();
    return 20.0 * std::log10(data_range / e);
}

namespace {

std::vector<double> gaussian_kernel(int window, double sigma) {
    std::vector<double> k(window);
    const double c = (window - 1) / 2.0;
    double sum = 0.0;
    for (int i = 0; i < window; ++i) {
        k[i] = std::exp(-(i - c) * (i - c) / (2.0 * sigma * sigma));
        sum += k[i];
    }
    for (auto& v : k) v /= sum;
    return k;
}

// Separable valid-mode filtering: output is (w-n+1) x (h-n+1).
void filter_valid(const std::vector<double>& in, int w, int h, const std::vector<double>& k,
                  std::vector<double>& out, int& ow, int& oh) {
    const int n = static_cast<int>(k.size());
    ow = w - n + 1;
    oh = h - n + 1;
    std::vector<double> tmp(static_cast<std::size_t>(ow) * h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < ow; ++x) {
            double s = 0.0;
            for (int i = 0; i < n; ++i) s += k[i] * in[static_cast<std::size_t>(y) * w + x + i];
            tmp[static_cast<std::size_t>(y) * ow + x] = s;
        }
    out.assign(static_cast<std::size_t>(ow) * oh, 0.0);
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) {
            double s = 0.0;
            for (int i = 0; i < n; ++i) s += k[i] * tmp[static_cast<std::size_t>(y + i) * ow + x];
            out[static_cast<std::size_t>(y) * ow + x] = s;
        }
}

struct SsimMeans {
    double ssim = 0.0; ///< mean of the full SSIM map.
    double cs = 0.0;   ///< mean of the contrast-structure term alone.
};

// Core single-scale computation on already-centered double buffers.
SsimMeans ssim_maps(const std::vector<double>& a, const std::vector<double>& b, int w, int h,
                    const SsimOptions& opt, int window) {
    const auto kernel = gaussian_kernel(window, opt.sigma);
    const std::size_t npx = static_cast<std::size_t>(w) * h;
    std::vector<double> aa(npx), bb(npx), ab(npx);
    for (std::size_t i = 0; i < npx; ++i) {
        aa[i] = a[i] * a[i];
        bb[i] = b[i] * b[i];
        ab[i] = a[i] * b[i];
    }
    int ow = 0, oh = 0;
    std::vector<double> mu_a, mu_b, s_aa, s_bb, s_ab;
    filter_valid(a, w, h, kernel, mu_a, ow, oh);
    filter_valid(b, w, h, kernel, mu_b, ow, oh);
    filter_valid(aa, w, h, kernel, s_aa, ow, oh);
    filter_valid(bb, w, h, kernel, s_bb, ow, oh);
    filter_valid(ab, w, h, kernel, s_ab, ow, oh);

    const double c1 = opt.k1 * opt.data_range * opt.k1 * opt.data_range;
    const double c2 = opt.k2 * opt.data_range * opt.k2 * opt.data_range;
    double sum_ssim = 0.0, sum_cs = 0.0;
    const std::size_t m = static_cast<std::size_t>(ow) * oh;
    for (std::size_t i = 0; i < m; ++i) {
        const double va = s_aa[i] - mu_a[i] * mu_a[i];
        const double vb = s_bb[i] - mu_b[i] * mu_b[i];
        const double cov = s_ab[i] - mu_a[i] * mu_b[i];
        const double l = (2.0 * mu_a[i] * mu_b[i] + c1) / (mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + c1);
        const double cs = (2.0 * cov + c2) / (va + vb + c2);
        sum_ssim += l * cs;
        sum_cs += cs;
    }
    return {sum_ssim / m, sum_cs / m};
}

void check_ssim_options(const SsimOptions& opt) {
    if (opt.window < 3 || opt.window % 2 == 0)
        throw DataError("ssim window must be odd and >= 3");
    if (!(opt.sigma > 0.0) || !(opt.data_range > 0.0))
        throw DataError("ssim sigma and data range must be positive");
}

int clamp_window(int window, int min_dim) {
    int w = std::min(window, min_dim);
    if (w % 2 == 0) --w;
    return w;
}

// Shift both inputs by the mean of their two global means. This makes the
// score exactly invariant to adding one constant to both images without
// affecting the zero-mean case.
void centered_copies(const Image& a, const Image& b, std::vector<double>& ca,
                     std::vector<double>& cb) {
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a.data[i];
        mb += b.data[i];
    }
    const double m = (ma + mb) / (2.0 * static_cast<double>(a.size()));
    ca.resize(a.size());
    cb.resize(b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        ca[i] = a.data[i] - m;
        cb[i] = b.data[i] - m;
    }
}

std::vector<double> mean_pool2(const std::vector<double>& in, int w, int h, int& ow, int& oh) {
    ow = w / 2;
    oh = h / 2;
    std::vector<double> out(static_cast<std::size_t>(ow) * oh);
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x)
            out[static_cast<std::size_t>(y) * ow + x] =
                0.25 * (in[static_cast<std::size_t>(2 * y) * w + 2 * x] +
                        in[static_cast<std::size_t>(2 * y) * w + 2 * x + 1] +
                        in[static_cast<std::size_t>(2 * y + 1) * w + 2 * x] +
                        in[static_cast<std::size_t>(2 * y + 1) * w + 2 * x + 1]);
    return out;
}

constexpr double kMsWeights[5] = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};

} // namespace

double ssim(const Image& a, const Image& b, const SsimOptions& opt) {
    require_same_shape(a, b);
    check_ssim_options(opt);
    const int window = clamp_window(opt.window, std::min(a.width, a.height));
    if (window < 3) throw DataError("image too small for ssim window");
    std::vector<double> ca, cb;
    centered_copies(a, b, ca, cb);
    return ssim_maps(ca, cb, a.width, a.height, opt, window).ssim;
}

double ms_ssim(const Image& a, const Image& b, const SsimOptions& opt) {
    require_same_shape(a, b);
    check_ssim_options(opt);
    const int window = clamp_window(opt.window, std::min(a.width, a.height));
    if (window < 3) throw DataError("image too small for ms-ssim window");

    // Count how many of the 5 scales still fit the window after 2x pooling.
    int n_scales = 0;
    for (int w = a.width, h = a.height; n_scales < 5 && std::min(w, h) >= window;
         w /= 2, h /= 2)
        ++n_scales;
    // Standard exponents as-is at the full 5 scales; rebalanced only when
    // small inputs force fewer scales.
    double wsum = 1.0;
    if (n_scales < 5) {
        wsum = 0.0;
        for (int j = 0; j < n_scales; ++j) wsum += kMsWeights[j];
    }

    std::vector<double> ca, cb;
    centered_copies(a, b, ca, cb);
    int w = a.width, h = a.height;
    double score = 1.0;
    for (int j = 0; j < n_scales; ++j) {
        const auto means = ssim_maps(ca, cb, w, h, opt, window);
        const double term = j + 1 == n_scales ? means.ssim : means.cs;
        score *= std::pow(std::max(term, 0.0), kMsWeights[j] / wsum);
        if (j + 1 < n_scales) {
            int ow = 0, oh = 0;
            ca = mean_pool2(ca, w, h, ow, oh);
            cb = mean_pool2(cb, w, h, ow, oh);
            w = ow;
            h = oh;
        }
    }
    return score;
}

GlobalMetrics compute_global_metrics(const Image& test, const Image& reference,
                                     double data_range) {
    SsimOptions opt;
    opt.data_range = data_range;
    GlobalMetrics m;
    m.rmse = rmse(test, reference);
    m.psnr = psnr(test, reference, data_range);
    m.ssim = ssim(test, reference, opt);
    m.ms_ssim = ms_ssim(test, reference, opt);
    return m;
}

std::string metrics_to_json(const GlobalMetrics& m) {
    nlohmann::json j;
    j["rmse"] = m.rmse;
    if (std::isinf(m.psnr))
        j["psnr"] = "inf";
    else
        j["psnr"] = m.psnr;
    j["ssim"] = m.ssim;
    j["ms_ssim"] = m.ms_ssim;
    return j.dump(2) + "\n";
}

} // namespace ctbench
