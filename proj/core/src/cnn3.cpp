#include "ctbench/cnn3.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "ctbench/errors.hpp"
#include "ctbench/loss.hpp"
#include "ctbench/parallel.hpp"

namespace ctbench {

namespace {
constexpr int C = kCnn3Channels;
constexpr std::size_t kK1 = static_cast<std::size_t>(C) * 1 * 9;
constexpr std::size_t kK2 = static_cast<std::size_t>(C) * C * 9;
constexpr std::size_t kK3 = static_cast<std::size_t>(1) * C * 9;
} // namespace

template <class T>
Cnn3ParamsT<T> Cnn3ParamsT<T>::zeros() {
    Cnn3ParamsT<T> p;
    p.k1.assign(kK1, T(0));
    p.b1.assign(C, T(0));
    p.k2.assign(kK2, T(0));
    p.b2.assign(C, T(0));
    p.k3.assign(kK3, T(0));
    p.b3.assign(1, T(0));
    return p;
}

template <class T>
std::size_t Cnn3ParamsT<T>::count() const {
    return k1.size() + b1.size() + k2.size() + b2.size() + k3.size() + b3.size();
}

template <class T>
std::vector<T> Cnn3ParamsT<T>::flatten() const {
    std::vector<T> flat;
    flat.reserve(count());
    for_each([&](const T& v) { flat.push_back(v); });
    return flat;
}

template <class T>
Cnn3ParamsT<T> Cnn3ParamsT<T>::from_flat(const std::vector<T>& flat) {
    Cnn3ParamsT<T> p = zeros();
    if (flat.size() != p.count()) throw DataError("weight payload has wrong element count");
    std::size_t i = 0;
    p.for_each([&](T& v) { v = flat[i++]; });
    return p;
}

void validate_weights(const Cnn3Weights& w) {
    if (w.k1.size() != kK1 || w.b1.size() != C || w.k2.size() != kK2 || w.b2.size() != C ||
        w.k3.size() != kK3 || w.b3.size() != 1)
        throw DataError("weight shapes do not match the 3-layer architecture");
    bool ok = true;
    w.for_each([&](float v) { ok = ok && std::isfinite(v); });
    if (!ok) throw DataError("weights contain non-finite values");
}

Cnn3Weights cnn3_he_init(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    Cnn3Weights w = Cnn3Weights::zeros();
    auto fill = [&](std::vector<float>& k, int fan_in) {
        std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / fan_in));
        for (auto& v : k) v = static_cast<float>(dist(rng));
    };
    fill(w.k1, 9);
    fill(w.k2, 9 * C);
    fill(w.k3, 9 * C);
    return w;
}

Cnn3Weights cnn3_identity_weights() {
    Cnn3Weights w = Cnn3Weights::zeros();
    w.k1[0 * 9 + 4] = 1.0f;            // layer 1, channel 0, center tap
    w.k2[(0 * C + 0) * 9 + 4] = 1.0f;  // layer 2, channel 0 <- channel 0
    w.k3[(0 * C + 0) * 9 + 4] = 1.0f;  // layer 3 <- channel 0
    return w;
}

namespace {

template <class T>
const T* plane(const Tensor<T>& t, int n, int c) {
    return t.data.data() + (static_cast<std::size_t>(n) * t.c + c) * t.plane();
}

template <class T>
T* plane(Tensor<T>& t, int n, int c) {
    return t.data.data() + (static_cast<std::size_t>(n) * t.c + c) * t.plane();
}

// Same-padded 3x3 convolution by kernel-tap shifts. Each output plane is
// produced start to finish by one worker, so accumulation order (and hence
// the result) never depends on the thread count.
template <class T>
void conv3x3(const Tensor<T>& in, const std::vector<T>& k, const std::vector<T>& bias, int cout,
             bool relu, Tensor<T>& out) {
    const int cin = in.c, h = in.h, w = in.w;
    out = Tensor<T>(in.n, cout, h, w);
    parallel_for(0, static_cast<std::int64_t>(in.n) * cout, [&](std::int64_t i0, std::int64_t i1) {
        for (std::int64_t idx = i0; idx < i1; ++idx) {
            const int n = static_cast<int>(idx / cout);
            const int oc = static_cast<int>(idx % cout);
            T* op = plane(out, n, oc);
            std::fill(op, op + static_cast<std::size_t>(h) * w, bias[oc]);
            for (int ic = 0; ic < cin; ++ic) {
                const T* ip = plane(in, n, ic);
                const T* kp = k.data() + (static_cast<std::size_t>(oc) * cin + ic) * 9;
                for (int ky = 0; ky < 3; ++ky) {
                    const int sy = ky - 1;
                    const int y0 = std::max(0, -sy), y1 = std::min(h, h - sy);
                    for (int kx = 0; kx < 3; ++kx) {
                        const T wv = kp[ky * 3 + kx];
                        const int sx = kx - 1;
                        const int x0 = std::max(0, -sx), x1 = std::min(w, w - sx);
                        for (int y = y0; y < y1; ++y) {
                            T* __restrict orow = op + static_cast<std::size_t>(y) * w;
                            const T* __restrict irow = ip + static_cast<std::size_t>(y + sy) * w + sx;
                            for (int x = x0; x < x1; ++x) orow[x] += wv * irow[x];
                        }
                    }
                }
            }
            if (relu)
                for (std::size_t i = 0; i < static_cast<std::size_t>(h) * w; ++i)
                    op[i] = std::max(op[i], T(0));
        }
    });
}

// dL/d(input) of a same-padded 3x3 conv: convolution with the channel-swapped,
// 180-degree-rotated kernel.
template <class T>
void conv3x3_backward_input(const Tensor<T>& gout, const std::vector<T>& k, int cin,
                            Tensor<T>& gin) {
    const int cout = gout.c;
    std::vector<T> kt(k.size());
    for (int oc = 0; oc < cout; ++oc)
        for (int ic = 0; ic < cin; ++ic)
            for (int t = 0; t < 9; ++t)
                kt[(static_cast<std::size_t>(ic) * cout + oc) * 9 + t] =
                    k[(static_cast<std::size_t>(oc) * cin + ic) * 9 + (8 - t)];
    const std::vector<T> zero_bias(cin, T(0));
    conv3x3(gout, kt, zero_bias, cin, false, gin);
}

// Lane-split dot product: partial sums land in fixed lanes regardless of
// length, so the reduction order is deterministic and the lane loop
// vectorizes without FP reassociation.
template <class T>
T dot_rows(const T* __restrict a, const T* __restrict b, int len, T* __restrict lanes) {
    constexpr int L = 16;
    int x = 0;
    for (; x + L <= len; x += L)
        for (int j = 0; j < L; ++j) lanes[j] += a[x + j] * b[x + j];
    T tail(0);
    for (; x < len; ++x) tail += a[x] * b[x];
    return tail;
}

// Accumulates dL/d(kernel) and dL/d(bias). Parallel over output channels;
// each channel's sums run in a fixed order over samples and taps.
template <class T>
void conv3x3_backward_kernel(const Tensor<T>& in, const Tensor<T>& gout, std::vector<T>& gk,
                             std::vector<T>& gb) {
    constexpr int L = 16;
    const int cin = in.c, cout = gout.c, h = in.h, w = in.w;
    parallel_for(0, cout, [&](std::int64_t o0, std::int64_t o1) {
        for (std::int64_t oc = o0; oc < o1; ++oc) {
            double bias_acc = 0.0;
            for (int n = 0; n < in.n; ++n) {
                const T* gp = plane(gout, n, static_cast<int>(oc));
                for (std::size_t i = 0; i < static_cast<std::size_t>(h) * w; ++i)
                    bias_acc += gp[i];
                for (int ic = 0; ic < cin; ++ic) {
                    const T* ip = plane(in, n, ic);
                    T* kp = gk.data() + (static_cast<std::size_t>(oc) * cin + ic) * 9;
                    for (int ky = 0; ky < 3; ++ky) {
                        const int sy = ky - 1;
                        const int y0 = std::max(0, -sy), y1 = std::min(h, h - sy);
                        for (int kx = 0; kx < 3; ++kx) {
                            const int sx = kx - 1;
                            const int x0 = std::max(0, -sx), x1 = std::min(w, w - sx);
                            T lanes[L] = {};
                            T tail(0);
                            for (int y = y0; y < y1; ++y) {
                                const T* grow = gp + static_cast<std::size_t>(y) * w + x0;
                                const T* irow = ip + static_cast<std::size_t>(y + sy) * w + sx + x0;
                                tail += dot_rows(grow, irow, x1 - x0, lanes);
                            }
                            double acc = tail;
                            for (int j = 0; j < L; ++j) acc += lanes[j];
                            kp[ky * 3 + kx] += static_cast<T>(acc);
                        }
                    }
                }
            }
            gb[oc] += static_cast<T>(bias_acc);
        }
    });
}

template <class T>
void relu_mask(Tensor<T>& grad, const Tensor<T>& act) {
    for (std::size_t i = 0; i < grad.size(); ++i)
        if (!(act.data[i] > T(0))) grad.data[i] = T(0);
}

} // namespace

template <class T>
Tensor<T> cnn3_forward_batch(const Cnn3ParamsT<T>& w, const Tensor<T>& x, Cnn3Trace<T>* trace) {
    if (x.c != 1) throw DataError("network input must have one channel");
    if (x.h < 3 || x.w < 3) throw DataError("network input must be at least 3x3");
    Tensor<T> a1, a2, y;
    conv3x3(x, w.k1, w.b1, C, true, a1);
    conv3x3(a1, w.k2, w.b2, C, true, a2);
    conv3x3(a2, w.k3, w.b3, 1, false, y);
    if (trace) {
        trace->a1 = std::move(a1);
        trace->a2 = std::move(a2);
    }
    return y;
}

template <class T>
void cnn3_backward_batch(const Cnn3ParamsT<T>& w, const Tensor<T>& x, const Cnn3Trace<T>& trace,
                         const Tensor<T>& grad_y, Cnn3ParamsT<T>& grad_w, Tensor<T>* grad_x) {
    conv3x3_backward_kernel(trace.a2, grad_y, grad_w.k3, grad_w.b3);
    Tensor<T> ga2;
    conv3x3_backward_input(grad_y, w.k3, C, ga2);
    relu_mask(ga2, trace.a2);

    conv3x3_backward_kernel(trace.a1, ga2, grad_w.k2, grad_w.b2);
    Tensor<T> ga1;
    conv3x3_backward_input(ga2, w.k2, C, ga1);
    relu_mask(ga1, trace.a1);

    conv3x3_backward_kernel(x, ga1, grad_w.k1, grad_w.b1);
    if (grad_x) conv3x3_backward_input(ga1, w.k1, 1, *grad_x);
}

template struct Cnn3ParamsT<float>;
template struct Cnn3ParamsT<double>;
template Tensor<float> cnn3_forward_batch<float>(const Cnn3ParamsT<float>&, const Tensor<float>&, Cnn3Trace<float>*);
template Tensor<double> cnn3_forward_batch<double>(const Cnn3ParamsT<double>&, const Tensor<double>&, Cnn3Trace<double>*);
template void cnn3_backward_batch<float>(const Cnn3ParamsT<float>&, const Tensor<float>&, const Cnn3Trace<float>&, const Tensor<float>&, Cnn3ParamsT<float>&, Tensor<float>*);
template void cnn3_backward_batch<double>(const Cnn3ParamsT<double>&, const Tensor<double>&, const Cnn3Trace<double>&, const Tensor<double>&, Cnn3ParamsT<double>&, Tensor<double>*);

Image cnn3_apply(const Cnn3Weights& w, const Image& x_model) {
    validate_weights(w);
    validate_image(x_model);
    Tensor<float> x(1, 1, x_model.height, x_model.width);
    std::copy(x_model.data.begin(), x_model.data.end(), x.data.begin());
    const Tensor<float> y = cnn3_forward_batch(w, x);
    Image out = x_model;
    std::copy(y.data.begin(), y.data.end(), out.data.begin());
    return out;
}

// ---- training ------------------------------------------------------------

namespace {

void for_each_vec(Cnn3Weights& a, Cnn3Weights& b, Cnn3Weights& c, Cnn3Weights& d,
                  const std::function<void(float&, float&, float&, float&)>& f) {
    std::vector<float>* va[6] = {&a.k1, &a.b1, &a.k2, &a.b2, &a.k3, &a.b3};
    std::vector<float>* vb[6] = {&b.k1, &b.b1, &b.k2, &b.b2, &b.k3, &b.b3};
    std::vector<float>* vc[6] = {&c.k1, &c.b1, &c.k2, &c.b2, &c.k3, &c.b3};
    std::vector<float>* vd[6] = {&d.k1, &d.b1, &d.k2, &d.b2, &d.k3, &d.b3};
    for (int i = 0; i < 6; ++i)
        for (std::size_t j = 0; j < va[i]->size(); ++j)
            f((*va[i])[j], (*vb[i])[j], (*vc[i])[j], (*vd[i])[j]);
}

} // namespace

void validate_train(const TrainConfig& cfg) {
    if (!(cfg.learning_rate > 0.0)) throw DataError("learning rate must be positive");
    if (cfg.minibatch < 1) throw DataError("minibatch must be >= 1");
    if (cfg.epochs < 1) throw DataError("epochs must be >= 1");
}

TrainResult cnn3_train(const std::vector<PatchPair>& patches, const LossConfig& loss,
                       const TrainConfig& cfg, const std::function<void(int, double)>& on_epoch) {
    validate_train(cfg);
    validate_loss(loss);
    if (patches.empty()) throw DataError("empty patch set");
    const int ph = patches[0].ld.height, pw = patches[0].ld.width;
    for (const auto& p : patches)
        if (p.ld.width != pw || p.ld.height != ph || !p.ld.same_shape(p.nd))
            throw DataError("patches must share dimensions");

    Cnn3Weights w = cnn3_he_init(cfg.seed);
    Cnn3Weights m = Cnn3Weights::zeros(); // Adam first moment / SGD velocity
    Cnn3Weights v = Cnn3Weights::zeros(); // Adam second moment
    constexpr double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8, momentum = 0.9;

    std::mt19937_64 rng(cfg.seed + 1);
    std::vector<std::size_t> order(patches.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    TrainResult result;
    long long step = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_sum = 0.0;
        int n_batches = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.minibatch) {
            const int bs = static_cast<int>(std::min<std::size_t>(cfg.minibatch,
                                                                  order.size() - start));
            Tensor<float> x(bs, 1, ph, pw), t(bs, 1, ph, pw);
            for (int b = 0; b < bs; ++b) {
                const auto& p = patches[order[start + b]];
                std::copy(p.ld.data.begin(), p.ld.data.end(),
                          x.data.begin() + static_cast<std::size_t>(b) * x.plane());
                std::copy(p.nd.data.begin(), p.nd.data.end(),
                          t.data.begin() + static_cast<std::size_t>(b) * t.plane());
            }

            Cnn3Trace<float> trace;
            const Tensor<float> y = cnn3_forward_batch(w, x, &trace);
            LossEvalT<float> eval = loss_and_grad(loss, y, t, w);
            if (!std::isfinite(eval.value))
                throw NumericalError("training diverged at epoch " + std::to_string(epoch + 1));
            epoch_sum += eval.value;
            ++n_batches;

            Cnn3Weights grad = Cnn3Weights::zeros();
            cnn3_backward_batch(w, x, trace, eval.grad_pred, grad);
            for_each_vec(grad, eval.grad_weights, m, v,
                         [](float& g, float& gw, float&, float&) { g += gw; });

            ++step;
            if (cfg.optimizer == Optimizer::adam) {
                const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
                const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
                for_each_vec(w, grad, m, v, [&](float& wi, float& gi, float& mi, float& vi) {
                    mi = static_cast<float>(beta1 * mi + (1.0 - beta1) * gi);
                    vi = static_cast<float>(beta2 * vi + (1.0 - beta2) * gi * gi);
                    wi -= static_cast<float>(cfg.learning_rate * (mi / c1) /
                                             (std::sqrt(vi / c2) + adam_eps));
                });
            } else {
                for_each_vec(w, grad, m, v, [&](float& wi, float& gi, float& mi, float&) {
                    mi = static_cast<float>(momentum * mi + gi);
                    wi -= static_cast<float>(cfg.learning_rate * mi);
                });
            }
        }
        const double epoch_loss = epoch_sum / std::max(n_batches, 1);
        result.epoch_loss.push_back(epoch_loss);
        if (on_epoch) on_epoch(epoch, epoch_loss);
    }
    result.weights = std::move(w);
    return result;
}

} // namespace ctbench
