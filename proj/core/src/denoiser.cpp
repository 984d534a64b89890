#include "ctbench/denoiser.hpp"

#include <fstream>
#include <utility>

#include <nlohmann/json.hpp>

#include "ctbench/errors.hpp"
#include "ctbench/io.hpp"

namespace ctbench {

Cnn3Model read_cnn3_model(const std::filesystem::path& path) {
    std::ifstream in(sidecar_path(path));
    if (!in) throw DataError("cannot open " + sidecar_path(path).string());
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError(sidecar_path(path).string() + ": " + e.what());
    }
    Cnn3Model model;
    try {
        model.normalization = normalization_from_string(meta.at("normalization").get<std::string>());
        model.lo = meta.at("lo").get<double>();
        model.hi = meta.at("hi").get<double>();
        const std::size_t count = meta.at("count").get<std::size_t>();
        const auto payload = read_f32_payload(payload_path(path), count);
        model.weights = Cnn3Weights::from_flat(payload);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(sidecar_path(path).string() + ": " + e.what());
    }
    validate_weights(model.weights);
    return model;
}

void write_cnn3_model(const Cnn3Model& model, const std::filesystem::path& path) {
    validate_weights(model.weights);
    write_f32_payload(model.weights.flatten(), payload_path(path));
    nlohmann::json meta{
        {"layers",
         {{{"kernel", {64, 1, 3, 3}}, {"bias", 64}},
          {{"kernel", {64, 64, 3, 3}}, {"bias", 64}},
          {{"kernel", {1, 64, 3, 3}}, {"bias", 1}}}},
        {"count", model.weights.count()},
        {"normalization", to_string(model.normalization)},
        {"lo", model.lo},
        {"hi", model.hi}};
    std::ofstream out(sidecar_path(path), std::ios::trunc);
    if (!out) throw DataError("cannot write " + sidecar_path(path).string());
    out << meta.dump(2) << "\n";
}

namespace {

class IdentityDenoiser final : public Denoiser {
public:
    std::string name() const override { return "identity"; }
    Image apply(const Image& hu, const std::string&) const override { return hu; }
};

class GaussianDenoiser final : public Denoiser {
public:
    explicit GaussianDenoiser(double sigma) : sigma_(sigma) {}
    std::string name() const override { return "gaussian"; }
    Image apply(const Image& hu, const std::string&) const override {
        return gaussian_denoise(hu, sigma_);
    }

private:
    double sigma_;
};

class TvDenoiser final : public Denoiser {
public:
    TvDenoiser(double lambda, int iterations) : lambda_(lambda), iterations_(iterations) {}
    std::string name() const override { return "tv"; }
    Image apply(const Image& hu, const std::string&) const override {
        return tv_denoise(hu, lambda_, iterations_);
    }

private:
    double lambda_;
    int iterations_;
};

class Cnn3Denoiser final : public Denoiser {
public:
    explicit Cnn3Denoiser(Cnn3Model model) : model_(std::move(model)) {
        validate_weights(model_.weights);
    }
    std::string name() const override { return "cnn3"; }
    Image apply(const Image& hu, const std::string&) const override {
        const Image x = normalize(hu, model_.normalization, model_.lo, model_.hi);
        const Image y = cnn3_apply(model_.weights, x);
        return denormalize(y, model_.normalization, model_.lo, model_.hi);
    }

private:
    Cnn3Model model_;
};

class ExternalDenoiser final : public Denoiser {
public:
    explicit ExternalDenoiser(std::filesystem::path dir) : dir_(std::move(dir)) {}
    std::string name() const override { return "external"; }
    Image apply(const Image& hu, const std::string& key) const override {
        const auto path = dir_ / (key + ".f32");
        if (!std::filesystem::exists(path))
            throw DataError("external output missing: " + path.string());
        Image out = read_image(path);
        if (!out.same_shape(hu))
            throw DataError("external output has wrong dimensions: " + path.string());
        return out;
    }

private:
    std::filesystem::path dir_;
};

} // namespace

std::unique_ptr<Denoiser> make_identity_denoiser() { return std::make_unique<IdentityDenoiser>(); }

std::unique_ptr<Denoiser> make_gaussian_denoiser(double sigma_px) {
    return std::make_unique<GaussianDenoiser>(sigma_px);
}

std::unique_ptr<Denoiser> make_tv_denoiser(double lambda, int iterations) {
    return std::make_unique<TvDenoiser>(lambda, iterations);
}

std::unique_ptr<Denoiser> make_cnn3_denoiser(Cnn3Model model) {
    return std::make_unique<Cnn3Denoiser>(std::move(model));
}

std::unique_ptr<Denoiser> make_external_denoiser(const std::filesystem::path& dir) {
    return std::make_unique<ExternalDenoiser>(dir);
}

std::vector<Image> apply_denoiser(const Denoiser& d, const std::vector<Image>& inputs,
                                  const std::vector<std::string>& keys) {
    if (!keys.empty() && keys.size() != inputs.size())
        throw DataError("keys must match inputs");
    std::vector<Image> out;
    out.reserve(inputs.size());
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        const std::string key = keys.empty() ? std::to_string(i) : keys[i];
        out.push_back(d.apply(inputs[i], key));
    }
    return out;
}

} // namespace ctbench
