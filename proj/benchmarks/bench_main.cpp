// Microbenchmarks for the hot paths: simulation, reconstruction, bench
// measurements, and CNN training building blocks. Sizes match typical use
// (256^2 grids, 55 px training patches).
#include <benchmark/benchmark.h>

#include <random>

#include "ctbench/bench.hpp"
#include "ctbench/cnn3.hpp"
#include "ctbench/denoiser.hpp"
#include "ctbench/loss.hpp"
#include "ctbench/phantom.hpp"
#include "ctbench/scanner.hpp"

namespace {

using namespace ctbench;

ScanGeometry geom256() {
    ScanGeometry g;
    g.n_views = 360;
    g.n_detectors = 365;
    g.detector_spacing_mm = 0.5;
    return g;
}

const PhantomSpec& contrast_spec() {
    static const PhantomSpec spec = make_contrast_phantom(60.0);
    return spec;
}

const Image& phantom256() {
    static const Image img = rasterize(contrast_spec(), 256, 256, 0.5, 4);
    return img;
}

const Sinogram& sino256() {
    static const Sinogram s = forward_project(hu_to_mu(phantom256()), geom256());
    return s;
}

const Image& recon256() {
    static const Image img =
        fbp(sino256(), geom256(), 256, 256, phantom256().pixel_spacing_mm);
    return img;
}

Image noise_image(int side, std::uint64_t seed) {
    Image img = make_image(side, side, 0.5);
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> n(0.0f, 10.0f);
    for (auto& v : img.data) v = n(rng);
    return img;
}

Tensor<float> patch_batch(int n, int side, std::uint64_t seed) {
    Tensor<float> t(n, 1, side, side);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    for (auto& v : t.data) v = u(rng);
    return t;
}

void bm_rasterize(benchmark::State& state) {
    for (auto _ : state)
        benchmark::DoNotOptimize(rasterize(contrast_spec(), 256, 256, 0.5, 4));
}
BENCHMARK(bm_rasterize)->Unit(benchmark::kMillisecond);

void bm_forward_project(benchmark::State& state) {
    const Image mu = hu_to_mu(phantom256());
    const ScanGeometry g = geom256();
    for (auto _ : state) benchmark::DoNotOptimize(forward_project(mu, g));
}
BENCHMARK(bm_forward_project)->Unit(benchmark::kMillisecond);

void bm_fbp(benchmark::State& state) {
    const ScanGeometry g = geom256();
    for (auto _ : state)
        benchmark::DoNotOptimize(fbp(sino256(), g, 256, 256, 0.5));
}
BENCHMARK(bm_fbp)->Unit(benchmark::kMillisecond);

void bm_simulate_scan(benchmark::State& state) {
    const ScanGeometry g = geom256();
    std::uint64_t seed = 1;
    for (auto _ : state)
        benchmark::DoNotOptimize(simulate_scan(phantom256(), g, 0.25, seed++));
}
BENCHMARK(bm_simulate_scan)->Unit(benchmark::kMillisecond);

void bm_mtf_from_disk(benchmark::State& state) {
    const Image& img = recon256();
    for (auto _ : state)
        benchmark::DoNotOptimize(
            mtf_from_disk(img, contrast_spec().inserts[0], contrast_spec().body_hu));
}
BENCHMARK(bm_mtf_from_disk)->Unit(benchmark::kMillisecond);

void bm_nps_estimate(benchmark::State& state) {
    static const std::vector<Image> ens = [] {
        std::vector<Image> v;
        for (int k = 0; k < 16; ++k) v.push_back(noise_image(160, 100 + k));
        return v;
    }();
    const Roi roi{16, 16, 128, 128};
    for (auto _ : state) benchmark::DoNotOptimize(nps_estimate(ens, roi));
}
BENCHMARK(bm_nps_estimate)->Unit(benchmark::kMillisecond);

void bm_gaussian_denoise(benchmark::State& state) {
    const Image& img = recon256();
    for (auto _ : state) benchmark::DoNotOptimize(gaussian_denoise(img, 1.5));
}
BENCHMARK(bm_gaussian_denoise)->Unit(benchmark::kMillisecond);

void bm_tv_denoise(benchmark::State& state) {
    const Image& img = recon256();
    for (auto _ : state) benchmark::DoNotOptimize(tv_denoise(img, 0.1, 30));
}
BENCHMARK(bm_tv_denoise)->Unit(benchmark::kMillisecond);

void bm_cnn3_apply(benchmark::State& state) {
    static const Cnn3Weights w = cnn3_he_init(7);
    static const Image x = [] {
        Image img = noise_image(160, 42);
        for (auto& v : img.data) v = std::abs(v) / 40.0f; // model domain [0, 1]
        return img;
    }();
    for (auto _ : state) benchmark::DoNotOptimize(cnn3_apply(w, x));
}
BENCHMARK(bm_cnn3_apply)->Unit(benchmark::kMillisecond);

void bm_cnn3_forward_batch(benchmark::State& state) {
    static const Cnn3Weights w = cnn3_he_init(7);
    static const Tensor<float> x = patch_batch(16, 55, 3);
    for (auto _ : state) benchmark::DoNotOptimize(cnn3_forward_batch(w, x));
}
BENCHMARK(bm_cnn3_forward_batch)->Unit(benchmark::kMillisecond);

void bm_cnn3_train_step(benchmark::State& state) {
    static const Cnn3Weights w = cnn3_he_init(7);
    static const Tensor<float> x = patch_batch(16, 55, 3);
    static const Tensor<float> target = patch_batch(16, 55, 4);
    const LossConfig loss;
    for (auto _ : state) {
        Cnn3Trace<float> trace;
        const Tensor<float> pred = cnn3_forward_batch(w, x, &trace);
        const auto eval = loss_and_grad(loss, pred, target, w);
        Cnn3Weights grad = Cnn3Weights::zeros();
        cnn3_backward_batch(w, x, trace, eval.grad_pred, grad);
        benchmark::DoNotOptimize(grad);
    }
}
BENCHMARK(bm_cnn3_train_step)->Unit(benchmark::kMillisecond);

void bm_loss_msssim_l1(benchmark::State& state) {
    static const Cnn3Weights w = Cnn3Weights::zeros();
    static const Tensor<float> pred = patch_batch(16, 55, 3);
    static const Tensor<float> target = patch_batch(16, 55, 4);
    LossConfig cfg;
    cfg.kind = LossKind::msssim_l1;
    for (auto _ : state) benchmark::DoNotOptimize(loss_and_grad(cfg, pred, target, w));
}
BENCHMARK(bm_loss_msssim_l1)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
