#include "ctbench/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "ctbench/errors.hpp"

namespace ctbench {

std::string to_string(Normalization mode) {
    return mode == Normalization::unity ? "unity" : "normF";
}

Normalization normalization_from_string(const std::string& s) {
    if (s == "unity") return Normalization::unity;
    if (s == "normF" || s == "normf") return Normalization::normF;
    throw DataError("unknown normalization '" + s + "'");
}

Image normalize(const Image& img, Normalization mode, double lo, double hi) {
    validate_image(img);
    Image out = img;
    if (mode == Normalization::unity) {
        if (!(hi > lo)) throw DataError("normalize: hi must exceed lo");
        const double scale = 1.0 / (hi - lo);
        for (auto& v : out.data)
            v = static_cast<float>(std::clamp((v - lo) * scale, 0.0, 1.0));
    } else {
        for (auto& v : out.data) v = std::max(0.0f, v + 1024.0f);
    }
    return out;
}

Image denormalize(const Image& img, Normalization mode, double lo, double hi) {
    validate_image(img);
    Image out = img;
    if (mode == Normalization::unity) {
        if (!(hi > lo)) throw DataError("denormalize: hi must exceed lo");
        for (auto& v : out.data) v = static_cast<float>(v * (hi - lo) + lo);
    } else {
        for (auto& v : out.data) v -= 1024.0f;
    }
    return out;
}

Image dose_blend(const Image& nd, const Image& ld, double gamma) {
    validate_image(nd);
    validate_image(ld);
    if (!nd.same_shape(ld)) throw DataError("dose_blend: images must share dimensions");
    Image out = nd;
    for (std::size_t i = 0; i < out.size(); ++i)
        out.data[i] = static_cast<float>(nd.data[i] + gamma * (ld.data[i] - nd.data[i]));
    return out;
}

void validate_preprocess(const PreprocessConfig& cfg) {
    if (cfg.patch_size < 8) throw DataError("patch size must be >= 8");
    if (cfg.patch_stride < 0) throw DataError("patch stride must be >= 1 (0 = patch size)");
    if (!(cfg.augment.gamma_low < cfg.augment.gamma_high))
        throw DataError("dose blend range must satisfy gamma_low < gamma_high");
}

Image resize_bilinear(const Image& img, int new_width, int new_height) {
    validate_image(img);
    if (new_width <= 0 || new_height <= 0) throw DataError("resize target must be positive");
    const double sx = static_cast<double>(img.width) / new_width;
    const double sy = static_cast<double>(img.height) / new_height;
    Image out = make_image(new_width, new_height, img.pixel_spacing_mm * sx);
    for (int y = 0; y < new_height; ++y)
        for (int x = 0; x < new_width; ++x) {
            const double px = std::clamp((x + 0.5) * sx - 0.5, 0.0, img.width - 1.0);
            const double py = std::clamp((y + 0.5) * sy - 0.5, 0.0, img.height - 1.0);
            out.at(x, y) = static_cast<float>(sample_bilinear(img, px, py));
        }
    return out;
}

namespace {

Image extract_patch(const Image& img, int x0, int y0, int size) {
    Image p = make_image(size, size, img.pixel_spacing_mm);
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) p.at(x, y) = img.at(x0 + x, y0 + y);
    return p;
}

Image rot90cw(const Image& img) {
    Image out = make_image(img.height, img.width, img.pixel_spacing_mm);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) out.at(img.height - 1 - y, x) = img.at(x, y);
    return out;
}

Image flip_lr(const Image& img) {
    Image out = img;
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) out.at(img.width - 1 - x, y) = img.at(x, y);
    return out;
}

Image flip_ud(const Image& img) {
    Image out = img;
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) out.at(x, img.height - 1 - y) = img.at(x, y);
    return out;
}

Image transform(const Image& img, int quarter_turns, bool lr) {
    Image out = img;
    for (int i = 0; i < quarter_turns; ++i) out = rot90cw(out);
    return lr ? flip_lr(out) : flip_ud(out);
}

} // namespace

std::vector<PatchPair> make_patch_set(const std::vector<std::pair<Image, Image>>& pairs,
                                      const PreprocessConfig& cfg, std::uint64_t seed) {
    validate_preprocess(cfg);
    const int ps = cfg.patch_size;
    const int stride = cfg.patch_stride > 0 ? cfg.patch_stride : ps;
    std::mt19937_64 rng(seed);

    // HU-domain patches first; normalization happens at the very end.
    std::vector<std::pair<Image, Image>> hu_patches;
    for (const auto& [ld, nd] : pairs) {
        validate_image(ld);
        validate_image(nd);
        if (!ld.same_shape(nd)) throw DataError("ld/nd pair dimensions differ");
        if (ld.width < ps || ld.height < ps)
            throw DataError("image smaller than patch size");
        std::vector<std::pair<Image, Image>> views;
        views.emplace_back(ld, nd);
        if (cfg.augment.scale)
            for (double f : {0.6, 0.8}) {
                const int w = static_cast<int>(std::lround(ld.width * f));
                const int h = static_cast<int>(std::lround(ld.height * f));
                if (w >= ps && h >= ps)
                    views.emplace_back(resize_bilinear(ld, w, h), resize_bilinear(nd, w, h));
            }
        for (const auto& [vld, vnd] : views)
            for (int y = 0; y + ps <= vld.height; y += stride)
                for (int x = 0; x + ps <= vld.width; x += stride)
                    hu_patches.emplace_back(extract_patch(vld, x, y, ps),
                                            extract_patch(vnd, x, y, ps));
    }

    if (cfg.augment.rotate_flip) {
        const std::size_t base = hu_patches.size();
        for (std::size_t i = 0; i < base; ++i) {
            const int turns = 1 + static_cast<int>(rng() % 3); // 90/180/270
            const bool lr = (rng() % 2) == 0;
            hu_patches.emplace_back(transform(hu_patches[i].first, turns, lr),
                                    transform(hu_patches[i].second, turns, lr));
        }
    }

    if (cfg.augment.dose_blend) {
        std::uniform_real_distribution<double> gamma(cfg.augment.gamma_low,
                                                     cfg.augment.gamma_high);
        const std::size_t base = hu_patches.size();
        for (std::size_t i = 0; i < base; ++i) {
            const double g = gamma(rng);
            hu_patches.emplace_back(dose_blend(hu_patches[i].second, hu_patches[i].first, g),
                                    hu_patches[i].second);
        }
    }

    std::vector<PatchPair> out;
    out.reserve(hu_patches.size());
    for (auto& [ld, nd] : hu_patches)
        out.push_back({normalize(ld, cfg.normalization), normalize(nd, cfg.normalization)});
    return out;
}

} // namespace ctbench
