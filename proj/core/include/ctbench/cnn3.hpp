#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "ctbench/image.hpp"
#include "ctbench/tensor.hpp"

namespace ctbench {

inline constexpr int kCnn3Channels = 64;

/// Parameters of the 3-layer convolutional denoiser:
/// conv3x3(1->64) -> ReLU -> conv3x3(64->64) -> ReLU -> conv3x3(64->1),
/// zero "same" padding, direct (non-residual) mapping.
/// Kernels are stored [out][in][ky][kx], row-major.
template <class T>
struct Cnn3ParamsT {
    std::vector<T> k1, b1; // 64 x 1 x 3 x 3, 64
    std::vector<T> k2, b2; // 64 x 64 x 3 x 3, 64
    std::vector<T> k3, b3; // 1 x 64 x 3 x 3, 1

    static Cnn3ParamsT zeros();
    std::size_t count() const;

    /// Visits every parameter in a fixed order (k1,b1,k2,b2,k3,b3); also the
    /// serialization order of the weights file payload.
    template <class F>
    void for_each(F&& f) {
        for (auto* v : {&k1, &b1, &k2, &b2, &k3, &b3})
            for (auto& x : *v) f(x);
    }
    template <class F>
    void for_each(F&& f) const {
        for (auto* v : {&k1, &b1, &k2, &b2, &k3, &b3})
            for (const auto& x : *v) f(x);
    }

    std::vector<T> flatten() const;
    static Cnn3ParamsT from_flat(const std::vector<T>& flat);
};

using Cnn3Weights = Cnn3ParamsT<float>;

void validate_weights(const Cnn3Weights& w);

/// He fan-in Gaussian kernels, zero biases; deterministic per seed.
Cnn3Weights cnn3_he_init(std::uint64_t seed);

/// Center-tap delta kernels: the network computes the identity for any
/// non-negative input (ReLUs never clip).
Cnn3Weights cnn3_identity_weights();

/// Layer activations kept for the backward pass.
template <class T>
struct Cnn3Trace {
    Tensor<T> a1, a2; // post-ReLU outputs of layers 1 and 2
};

/// Forward pass on an NCHW batch (c must be 1). Pass trace to keep the
/// intermediates needed by cnn3_backward.
template <class T>
Tensor<T> cnn3_forward_batch(const Cnn3ParamsT<T>& w, const Tensor<T>& x,
                             Cnn3Trace<T>* trace = nullptr);

/// Accumulates parameter gradients for d(loss)/d(output) = grad_y into grad_w
/// (which must be zero-initialized by the caller) and optionally returns the
/// input gradient.
template <class T>
void cnn3_backward_batch(const Cnn3ParamsT<T>& w, const Tensor<T>& x, const Cnn3Trace<T>& trace,
                         const Tensor<T>& grad_y, Cnn3ParamsT<T>& grad_w,
                         Tensor<T>* grad_x = nullptr);

extern template struct Cnn3ParamsT<float>;
extern template struct Cnn3ParamsT<double>;
extern template Tensor<float> cnn3_forward_batch<float>(const Cnn3ParamsT<float>&, const Tensor<float>&, Cnn3Trace<float>*);
extern template Tensor<double> cnn3_forward_batch<double>(const Cnn3ParamsT<double>&, const Tensor<double>&, Cnn3Trace<double>*);
extern template void cnn3_backward_batch<float>(const Cnn3ParamsT<float>&, const Tensor<float>&, const Cnn3Trace<float>&, const Tensor<float>&, Cnn3ParamsT<float>&, Tensor<float>*);
extern template void cnn3_backward_batch<double>(const Cnn3ParamsT<double>&, const Tensor<double>&, const Cnn3Trace<double>&, const Tensor<double>&, Cnn3ParamsT<double>&, Tensor<double>*);

/// Single-image convenience wrapper (model domain in, model domain out).
Image cnn3_apply(const Cnn3Weights& w, const Image& x_model);

} // namespace ctbench
