#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ctbench/cnn3.hpp"
#include "ctbench/preprocess.hpp"
#include "ctbench/tensor.hpp"

namespace ctbench {

/// Training objectives. All data terms are averaged over batch * pixels so the
/// magnitudes stay comparable across patch sizes.
enum class LossKind {
    mse,         ///< mean (pred - target)^2
    mse_l1prior, ///< MSE + (lambda/2) * mean |pred|
    mae,         ///< mean |pred - target|
    mse_tvprior, ///< MSE + (lambda/2) * mean eps-smoothed isotropic TV(pred)
    mse_wd,      ///< MSE + (beta/2) * ||weights||^2
    msssim_l1,   ///< alpha * (1 - MS-SSIM) + (1 - alpha) * mean |pred - target|
};

inline constexpr LossKind kAllLossKinds[] = {
    LossKind::mse,      LossKind::mse_l1prior, LossKind::mae,
    LossKind::mse_tvprior, LossKind::mse_wd,   LossKind::msssim_l1,
};

std::string to_string(LossKind kind);
LossKind loss_kind_from_string(const std::string& s); // "mse", "msel1", "mae", "msetv", "msewd", "msssiml1"

struct LossConfig {
    LossKind kind = LossKind::mse;
    double lambda = 1e-7; ///< prior weight (L1 / TV variants)
    double beta = 1e-4;   ///< weight-decay coefficient
    double alpha = 0.84;  ///< MS-SSIM mixing weight
};

void validate_loss(const LossConfig& cfg);

template <class T>
struct LossEvalT {
    double value = 0.0;
    Tensor<T> grad_pred;        ///< d(value)/d(pred), same shape as pred.
    Cnn3ParamsT<T> grad_weights; ///< direct weight term (beta * theta for weight decay, else 0).
};

/// Loss value and analytic gradients. pred/target are model-domain NCHW
/// batches with c = 1; weights only contribute for the weight-decay kind.
/// The MS-SSIM term shrinks its window and scale count to fit small patches
/// and reduces to plain SSIM at one scale.
template <class T>
LossEvalT<T> loss_and_grad(const LossConfig& cfg, const Tensor<T>& pred,
                           const Tensor<T>& target, const Cnn3ParamsT<T>& weights);

extern template LossEvalT<float> loss_and_grad<float>(const LossConfig&, const Tensor<float>&, const Tensor<float>&, const Cnn3ParamsT<float>&);
extern template LossEvalT<double> loss_and_grad<double>(const LossConfig&, const Tensor<double>&, const Tensor<double>&, const Cnn3ParamsT<double>&);

enum class Optimizer { sgd_momentum, adam };

std::string to_string(Optimizer opt);
Optimizer optimizer_from_string(const std::string& s);

struct TrainConfig {
    double learning_rate = 1e-3; ///< menu: 1e-1, 1e-2, 1e-3, 1e-4
    int minibatch = 128;         ///< menu: 64, 128, 256, 512 (others accepted)
    int epochs = 10;
    std::uint64_t seed = 0;
    Optimizer optimizer = Optimizer::adam; // adam(0.9, 0.999, 1e-8) or sgd+momentum(0.9)
};

void validate_train(const TrainConfig& cfg);

struct TrainResult {
    Cnn3Weights weights;
    std::vector<double> epoch_loss; ///< mean minibatch loss per epoch.
};

/// Minibatch training from He-initialized weights; per-epoch reshuffle from
/// the seeded RNG. Gradient reduction order is fixed, so results do not
/// depend on the thread count. Throws NumericalError if the loss leaves the
/// finite range, naming the epoch. on_epoch (optional) observes the trace.
TrainResult cnn3_train(const std::vector<PatchPair>& patches, const LossConfig& loss,
                       const TrainConfig& cfg,
                       const std::function<void(int, double)>& on_epoch = {});

} // namespace ctbench
