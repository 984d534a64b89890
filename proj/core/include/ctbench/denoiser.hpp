#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "ctbench/cnn3.hpp"
#include "ctbench/image.hpp"
#include "ctbench/preprocess.hpp"

namespace ctbench {

/// Rudin-Osher-Fatemi denoising, min_u 0.5||u - img||^2 + lambda TV(u), by
/// Chambolle's dual projection with a fixed iteration count.
Image tv_denoise(const Image& img, double lambda, int iterations);

/// Separable Gaussian blur, kernel radius ceil(4 sigma), reflective borders.
/// Reference linear system for the bench-test oracles.
Image gaussian_denoise(const Image& img, double sigma_px);

/// Trained weights plus the normalization metadata recorded at train time;
/// what the weights file on disk stores.
struct Cnn3Model {
    Cnn3Weights weights;
    Normalization normalization = Normalization::unity;
    double lo = kUnityLo;
    double hi = kUnityHi;
};

Cnn3Model read_cnn3_model(const std::filesystem::path& path);
void write_cnn3_model(const Cnn3Model& model, const std::filesystem::path& path);

/// Uniform interface over everything the bench suite can score. Inputs and
/// outputs are HU images of identical dimensions; key is the input's basename
/// (only the external directory denoiser uses it).
class Denoiser {
public:
    virtual ~Denoiser() = default;
    virtual std::string name() const = 0;
    virtual Image apply(const Image& hu, const std::string& key) const = 0;
};

std::unique_ptr<Denoiser> make_identity_denoiser();
std::unique_ptr<Denoiser> make_gaussian_denoiser(double sigma_px);
std::unique_ptr<Denoiser> make_tv_denoiser(double lambda, int iterations);
/// Normalizes per the model's recorded mode, runs the network, denormalizes.
std::unique_ptr<Denoiser> make_cnn3_denoiser(Cnn3Model model);
/// Serves pre-denoised images from dir, matched to inputs by key: dir/<key>.f32.
/// Missing files raise DataError naming the file.
std::unique_ptr<Denoiser> make_external_denoiser(const std::filesystem::path& dir);

/// One output per input; keys default to "0", "1", ... when omitted.
std::vector<Image> apply_denoiser(const Denoiser& d, const std::vector<Image>& inputs,
                                  const std::vector<std::string>& keys = {});

} // namespace ctbench
