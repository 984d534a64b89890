#include "ctbench/loss.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "ctbench/errors.hpp"

namespace ctbench {

std::string to_string(LossKind kind) {
    switch (kind) {
        case LossKind::mse: return "mse";
        case LossKind::mse_l1prior: return "msel1";
        case LossKind::mae: return "mae";
        case LossKind::mse_tvprior: return "msetv";
        case LossKind::mse_wd: return "msewd";
        case LossKind::msssim_l1: return "msssiml1";
    }
    throw DataError("unknown loss kind");
}

LossKind loss_kind_from_string(const std::string& s) {
    for (LossKind k : kAllLossKinds)
        if (to_string(k) == s) return k;
    throw DataError("unknown loss '" + s + "'");
}

std::string to_string(Optimizer opt) { return opt == Optimizer::adam ? "adam" : "sgd"; }

Optimizer optimizer_from_string(const std::string& s) {
    if (s == "adam") return Optimizer::adam;
    if (s == "sgd" || s == "sgd_momentum") return Optimizer::sgd_momentum;
    throw DataError("unknown optimizer '" + s + "'");
}

void validate_loss(const LossConfig& cfg) {
    if (cfg.lambda < 0.0) throw DataError("lambda must be >= 0");
    if (cfg.beta < 0.0) throw DataError("beta must be >= 0");
    if (cfg.alpha < 0.0 || cfg.alpha > 1.0) throw DataError("alpha must be in [0, 1]");
}

namespace {

template <class T>
T sign_of(T v) {
    return v > T(0) ? T(1) : (v < T(0) ? T(-1) : T(0));
}

// ---- MS-SSIM term --------------------------------------------------------
//
// Evaluated per sample in the model domain with a fixed dynamic range of 1.
// The window shrinks to the largest odd size that fits the patch, and scales
// are dropped once 2x pooling makes the patch smaller than the window; with
// one scale left this is plain single-scale SSIM.

constexpr double kMsW[5] = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};
constexpr double kMsC1 = 0.01 * 0.01; // (k1 * range)^2 at range 1
constexpr double kMsC2 = 0.03 * 0.03;
constexpr double kMsSigma = 1.5;
constexpr double kTermFloor = 1e-12; // keeps pow() off zero/negative bases

template <class T>
std::vector<T> gauss1d(int window) {
    std::vector<T> k(window);
    const double c = (window - 1) / 2.0;
    double sum = 0.0;
    for (int i = 0; i < window; ++i) {
        const double v = std::exp(-(i - c) * (i - c) / (2.0 * kMsSigma * kMsSigma));
        k[i] = static_cast<T>(v);
        sum += v;
    }
    for (auto& v : k) v = static_cast<T>(v / sum);
    return k;
}

// Valid-mode separable filtering: out is (w-n+1) x (h-n+1).
template <class T>
void filt_valid(const std::vector<T>& in, int w, int h, const std::vector<T>& k,
                std::vector<T>& out, int& ow, int& oh) {
    const int n = static_cast<int>(k.size());
    ow = w - n + 1;
    oh = h - n + 1;
    std::vector<T> tmp(static_cast<std::size_t>(ow) * h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < ow; ++x) {
            T s = 0;
            for (int i = 0; i < n; ++i) s += k[i] * in[static_cast<std::size_t>(y) * w + x + i];
            tmp[static_cast<std::size_t>(y) * ow + x] = s;
        }
    out.assign(static_cast<std::size_t>(ow) * oh, T(0));
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) {
            T s = 0;
            for (int i = 0; i < n; ++i) s += k[i] * tmp[static_cast<std::size_t>(y + i) * ow + x];
            out[static_cast<std::size_t>(y) * ow + x] = s;
        }
}

// Adjoint of filt_valid: spreads an (ow x oh) gradient back over (w x h).
template <class T>
void filt_valid_adjoint(const std::vector<T>& gin, int ow, int oh, const std::vector<T>& k,
                        int w, int h, std::vector<T>& out) {
    const int n = static_cast<int>(k.size());
    out.assign(static_cast<std::size_t>(w) * h, T(0));
    std::vector<T> tmp(static_cast<std::size_t>(ow) * h, T(0));
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) {
            const T g = gin[static_cast<std::size_t>(y) * ow + x];
            for (int i = 0; i < n; ++i) tmp[static_cast<std::size_t>(y + i) * ow + x] += k[i] * g;
        }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < ow; ++x) {
            const T g = tmp[static_cast<std::size_t>(y) * ow + x];
            for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(y) * w + x + i] += k[i] * g;
        }
}

template <class T>
std::vector<T> pool2(const std::vector<T>& in, int w, int h, int& ow, int& oh) {
    ow = w / 2;
    oh = h / 2;
    std::vector<T> out(static_cast<std::size_t>(ow) * oh);
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x)
            out[static_cast<std::size_t>(y) * ow + x] =
                (in[static_cast<std::size_t>(2 * y) * w + 2 * x] +
                 in[static_cast<std::size_t>(2 * y) * w + 2 * x + 1] +
                 in[static_cast<std::size_t>(2 * y + 1) * w + 2 * x] +
                 in[static_cast<std::size_t>(2 * y + 1) * w + 2 * x + 1]) /
                T(4);
    return out;
}

template <class T>
void pool2_adjoint(const std::vector<T>& gin, int ow, int oh, int w,
                   std::vector<T>& out_accum) {
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) {
            const T g = gin[static_cast<std::size_t>(y) * ow + x] / T(4);
            out_accum[static_cast<std::size_t>(2 * y) * w + 2 * x] += g;
            out_accum[static_cast<std::size_t>(2 * y) * w + 2 * x + 1] += g;
            out_accum[static_cast<std::size_t>(2 * y + 1) * w + 2 * x] += g;
            out_accum[static_cast<std::size_t>(2 * y + 1) * w + 2 * x + 1] += g;
        }
}

template <class T>
struct ScaleStats {
    int w = 0, h = 0;   // image dims at this scale
    int ow = 0, oh = 0; // valid-filtered dims
    std::vector<T> a, b;
    std::vector<T> mu_a, mu_b;
    std::vector<T> cs, d;     // contrast-structure map and its denominator
    std::vector<T> l, dl;     // luminance map (last scale only)
    double cs_mean = 0.0;     // mean of cs (non-final scales)
    double ssim_mean = 0.0;   // mean of l*cs (final scale)
};

/// MS-SSIM of one sample; accumulates mult * d(MS-SSIM)/d(a) into grad_a.
template <class T>
double msssim_sample(const std::vector<T>& a0, const std::vector<T>& b0, int w0, int h0,
                     double mult, std::vector<T>& grad_a) {
    int window = std::min(11, std::min(w0, h0));
    if (window % 2 == 0) --window;
    if (window < 3) throw DataError("patch too small for the ms-ssim term");
    const auto kernel = gauss1d<T>(window);

    int n_scales = 0;
    for (int w = w0, h = h0; n_scales < 5 && std::min(w, h) >= window; w /= 2, h /= 2)
        ++n_scales;
    double wsum = 0.0;
    for (int j = 0; j < n_scales; ++j) wsum += kMsW[j];

    std::vector<ScaleStats<T>> sc(n_scales);
    for (int j = 0; j < n_scales; ++j) {
        ScaleStats<T>& s = sc[j];
        if (j == 0) {
            s.a = a0;
            s.b = b0;
            s.w = w0;
            s.h = h0;
        } else {
            s.a = pool2(sc[j - 1].a, sc[j - 1].w, sc[j - 1].h, s.w, s.h);
            s.b = pool2(sc[j - 1].b, sc[j - 1].w, sc[j - 1].h, s.w, s.h);
        }
        const std::size_t npx = s.a.size();
        std::vector<T> aa(npx), ab(npx), bb(npx);
        for (std::size_t i = 0; i < npx; ++i) {
            aa[i] = s.a[i] * s.a[i];
            ab[i] = s.a[i] * s.b[i];
            bb[i] = s.b[i] * s.b[i];
        }
        std::vector<T> s_aa, s_ab, s_bb;
        filt_valid(s.a, s.w, s.h, kernel, s.mu_a, s.ow, s.oh);
        filt_valid(s.b, s.w, s.h, kernel, s.mu_b, s.ow, s.oh);
        filt_valid(aa, s.w, s.h, kernel, s_aa, s.ow, s.oh);
        filt_valid(ab, s.w, s.h, kernel, s_ab, s.ow, s.oh);
        filt_valid(bb, s.w, s.h, kernel, s_bb, s.ow, s.oh);

        const std::size_t m = static_cast<std::size_t>(s.ow) * s.oh;
        s.cs.resize(m);
        s.d.resize(m);
        const bool last = j + 1 == n_scales;
        if (last) {
            s.l.resize(m);
            s.dl.resize(m);
        }
        double cs_sum = 0.0, ssim_sum = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const T va = s_aa[i] - s.mu_a[i] * s.mu_a[i];
            const T vb = s_bb[i] - s.mu_b[i] * s.mu_b[i];
            const T cov = s_ab[i] - s.mu_a[i] * s.mu_b[i];
            s.d[i] = va + vb + T(kMsC2);
            s.cs[i] = (T(2) * cov + T(kMsC2)) / s.d[i];
            cs_sum += s.cs[i];
            if (last) {
                s.dl[i] = s.mu_a[i] * s.mu_a[i] + s.mu_b[i] * s.mu_b[i] + T(kMsC1);
                s.l[i] = (T(2) * s.mu_a[i] * s.mu_b[i] + T(kMsC1)) / s.dl[i];
                ssim_sum += static_cast<double>(s.l[i]) * s.cs[i];
            }
        }
        s.cs_mean = cs_sum / m;
        s.ssim_mean = ssim_sum / m;
    }

    double ms = 1.0;
    for (int j = 0; j < n_scales; ++j) {
        const bool last = j + 1 == n_scales;
        const double term = std::max(last ? sc[j].ssim_mean : sc[j].cs_mean, kTermFloor);
        ms *= std::pow(term, kMsW[j] / wsum);
    }

    // Backward: per-scale image gradients, then chain through the pooling.
    std::vector<std::vector<T>> g_img(n_scales);
    for (int j = 0; j < n_scales; ++j) {
        const ScaleStats<T>& s = sc[j];
        const bool last = j + 1 == n_scales;
        const double term = last ? s.ssim_mean : s.cs_mean;
        const std::size_t m = static_cast<std::size_t>(s.ow) * s.oh;
        const std::size_t npx = static_cast<std::size_t>(s.w) * s.h;
        g_img[j].assign(npx, T(0));
        if (term <= kTermFloor) continue; // clamped factor: flat, no gradient
        const double coeff = ms * (kMsW[j] / wsum) / term / static_cast<double>(m);

        std::vector<T> g_mu(m), g_saa(m), g_sab(m);
        for (std::size_t i = 0; i < m; ++i) {
            // d(cs)/d(mu_a), d(cs)/d(s_aa), d(cs)/d(s_ab)
            const T dcs_dmu = (T(-2) * s.mu_b[i] + T(2) * s.cs[i] * s.mu_a[i]) / s.d[i];
            const T dcs_dsaa = -s.cs[i] / s.d[i];
            const T dcs_dsab = T(2) / s.d[i];
            if (last) {
                const T dl_dmu = (T(2) * s.mu_b[i] - T(2) * s.l[i] * s.mu_a[i]) / s.dl[i];
                g_mu[i] = static_cast<T>(coeff * (s.cs[i] * dl_dmu + s.l[i] * dcs_dmu));
                g_saa[i] = static_cast<T>(coeff * s.l[i] * dcs_dsaa);
                g_sab[i] = static_cast<T>(coeff * s.l[i] * dcs_dsab);
            } else {
                g_mu[i] = static_cast<T>(coeff * dcs_dmu);
                g_saa[i] = static_cast<T>(coeff * dcs_dsaa);
                g_sab[i] = static_cast<T>(coeff * dcs_dsab);
            }
        }
        std::vector<T> back;
        filt_valid_adjoint(g_mu, s.ow, s.oh, kernel, s.w, s.h, back);
        for (std::size_t i = 0; i < npx; ++i) g_img[j][i] += back[i];
        filt_valid_adjoint(g_saa, s.ow, s.oh, kernel, s.w, s.h, back);
        for (std::size_t i = 0; i < npx; ++i) g_img[j][i] += T(2) * s.a[i] * back[i];
        filt_valid_adjoint(g_sab, s.ow, s.oh, kernel, s.w, s.h, back);
        for (std::size_t i = 0; i < npx; ++i) g_img[j][i] += s.b[i] * back[i];
    }
    for (int j = n_scales - 1; j > 0; --j)
        pool2_adjoint(g_img[j], sc[j].w, sc[j].h, sc[j - 1].w, g_img[j - 1]);
    for (std::size_t i = 0; i < g_img[0].size(); ++i)
        grad_a[i] += static_cast<T>(mult * g_img[0][i]);
    return ms;
}

} // namespace

template <class T>
LossEvalT<T> loss_and_grad(const LossConfig& cfg, const Tensor<T>& pred, const Tensor<T>& target,
                           const Cnn3ParamsT<T>& weights) {
    validate_loss(cfg);
    if (!pred.same_shape(target)) throw DataError("pred/target shape mismatch");
    if (pred.n < 1 || pred.c != 1) throw DataError("loss expects an NCHW batch with c = 1");

    LossEvalT<T> out;
    out.grad_pred = Tensor<T>(pred.n, 1, pred.h, pred.w);
    out.grad_weights = Cnn3ParamsT<T>::zeros();

    const std::size_t total = pred.size();
    const double inv = 1.0 / static_cast<double>(total); // 1 / (batch * pixels)
    double value = 0.0;

    const bool has_mse = cfg.kind == LossKind::mse || cfg.kind == LossKind::mse_l1prior ||
                         cfg.kind == LossKind::mse_tvprior || cfg.kind == LossKind::mse_wd;
    if (has_mse) {
        for (std::size_t i = 0; i < total; ++i) {
            const double d = static_cast<double>(pred.data[i]) - target.data[i];
            value += d * d;
            out.grad_pred.data[i] = static_cast<T>(2.0 * d * inv);
        }
        value *= inv;
    } else if (cfg.kind == LossKind::mae) {
        for (std::size_t i = 0; i < total; ++i) {
            const double d = static_cast<double>(pred.data[i]) - target.data[i];
            value += std::abs(d);
            out.grad_pred.data[i] = static_cast<T>(sign_of(d) * inv);
        }
        value *= inv;
    }

    switch (cfg.kind) {
        case LossKind::mse:
        case LossKind::mae:
            break;
        case LossKind::mse_l1prior: {
            double prior = 0.0;
            for (std::size_t i = 0; i < total; ++i) {
                prior += std::abs(static_cast<double>(pred.data[i]));
                out.grad_pred.data[i] += static_cast<T>(cfg.lambda / 2.0 * sign_of(static_cast<double>(pred.data[i])) * inv);
            }
            value += cfg.lambda / 2.0 * prior * inv;
            break;
        }
        case LossKind::mse_tvprior: {
            // eps-smoothed isotropic TV on forward differences (zero at the
            // far edges), phi = sqrt(dx^2 + dy^2 + eps).
            constexpr double eps = 1e-8;
            const int h = pred.h, w = pred.w;
            const double k = cfg.lambda / 2.0 * inv;
            std::vector<double> phi(static_cast<std::size_t>(h) * w);
            for (int n = 0; n < pred.n; ++n) {
                const T* p = pred.data.data() + static_cast<std::size_t>(n) * pred.plane();
                T* g = out.grad_pred.data.data() + static_cast<std::size_t>(n) * pred.plane();
                for (int y = 0; y < h; ++y)
                    for (int x = 0; x < w; ++x) {
                        const double dx = x + 1 < w ? static_cast<double>(p[y * w + x + 1]) - p[y * w + x] : 0.0;
                        const double dy = y + 1 < h ? static_cast<double>(p[(y + 1) * w + x]) - p[y * w + x] : 0.0;
                        phi[static_cast<std::size_t>(y) * w + x] = std::sqrt(dx * dx + dy * dy + eps);
                        value += k * phi[static_cast<std::size_t>(y) * w + x];
                    }
                for (int y = 0; y < h; ++y)
                    for (int x = 0; x < w; ++x) {
                        double acc = 0.0;
                        const double f = phi[static_cast<std::size_t>(y) * w + x];
                        const double dx = x + 1 < w ? static_cast<double>(p[y * w + x + 1]) - p[y * w + x] : 0.0;
                        const double dy = y + 1 < h ? static_cast<double>(p[(y + 1) * w + x]) - p[y * w + x] : 0.0;
                        acc += (-dx - dy) / f;
                        if (x > 0) {
                            const double dxl = static_cast<double>(p[y * w + x]) - p[y * w + x - 1];
                            acc += dxl / phi[static_cast<std::size_t>(y) * w + x - 1];
                        }
                        if (y > 0) {
                            const double dyu = static_cast<double>(p[y * w + x]) - p[(y - 1) * w + x];
                            acc += dyu / phi[static_cast<std::size_t>(y - 1) * w + x];
                        }
                        g[y * w + x] += static_cast<T>(k * acc);
                    }
            }
            break;
        }
        case LossKind::mse_wd: {
            double ss = 0.0;
            weights.for_each([&](const T& v) { ss += static_cast<double>(v) * v; });
            value += cfg.beta / 2.0 * ss;
            std::size_t i = 0;
            std::vector<T> flat = weights.flatten();
            out.grad_weights.for_each([&](T& g) { g = static_cast<T>(cfg.beta * flat[i++]); });
            break;
        }
        case LossKind::msssim_l1: {
            const std::size_t plane = pred.plane();
            double mae = 0.0, ms_sum = 0.0;
            for (std::size_t i = 0; i < total; ++i) {
                const double d = static_cast<double>(pred.data[i]) - target.data[i];
                mae += std::abs(d);
                out.grad_pred.data[i] = static_cast<T>((1.0 - cfg.alpha) * sign_of(d) * inv);
            }
            mae *= inv;
            const double mult = -cfg.alpha / static_cast<double>(pred.n);
            for (int n = 0; n < pred.n; ++n) {
                std::vector<T> a(pred.data.begin() + n * plane, pred.data.begin() + (n + 1) * plane);
                std::vector<T> b(target.data.begin() + n * plane,
                                 target.data.begin() + (n + 1) * plane);
                std::vector<T> grad(plane, T(0));
                ms_sum += msssim_sample(a, b, pred.w, pred.h, 1.0, grad);
                T* g = out.grad_pred.data.data() + static_cast<std::size_t>(n) * plane;
                for (std::size_t i = 0; i < plane; ++i) g[i] += static_cast<T>(mult * grad[i]);
            }
            value = cfg.alpha * (1.0 - ms_sum / pred.n) + (1.0 - cfg.alpha) * mae;
            break;
        }
    }

    out.value = value;
    return out;
}

template LossEvalT<float> loss_and_grad<float>(const LossConfig&, const Tensor<float>&, const Tensor<float>&, const Cnn3ParamsT<float>&);
template LossEvalT<double> loss_and_grad<double>(const LossConfig&, const Tensor<double>&, const Tensor<double>&, const Cnn3ParamsT<double>&);

} // namespace ctbench
