#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ctbench/image.hpp"

namespace ctbench {

/// Model-domain mapping applied to HU images before training/inference.
/// unity: (x - lo)/(hi - lo) clamped to [0,1]; normF: x + 1024, clamped at 0.
enum class Normalization { unity, normF };

std::string to_string(Normalization mode);
Normalization normalization_from_string(const std::string& s);

inline constexpr double kUnityLo = -1024.0;
inline constexpr double kUnityHi = 3072.0;

Image normalize(const Image& img, Normalization mode, double lo = kUnityLo,
                double hi = kUnityHi);
/// Inverse of normalize on in-range values (clamped values stay clamped).
Image denormalize(const Image& img, Normalization mode, double lo = kUnityLo,
                  double hi = kUnityHi);

/// nd + gamma * (ld - nd): gamma 0 is the normal-dose image, 1 the low-dose one.
Image dose_blend(const Image& nd, const Image& ld, double gamma);

struct AugmentConfig {
    bool scale = false;       ///< also patch bilinear 0.6x and 0.8x downscales.
    bool rotate_flip = false; ///< one extra rotated+flipped copy per base pair.
    bool dose_blend = false;  ///< duplicate each pair at gamma ~ U[gamma_low, gamma_high].
    double gamma_low = 0.5;
    double gamma_high = 1.2;
};

struct PreprocessConfig {
    Normalization normalization = Normalization::unity;
    int patch_size = 55;   ///< menu: 32, 55, 64, 96 (others accepted).
    int patch_stride = 0;  ///< 0 = same as patch_size (non-overlapping grid).
    AugmentConfig augment;
};

void validate_preprocess(const PreprocessConfig& cfg);

/// Co-located low-dose / normal-dose patch pair in the model domain.
struct PatchPair {
    Image ld;
    Image nd;
};

/// Cuts co-located LD/ND patches on a stride grid, applies the enabled
/// augmentations in HU, then normalizes per cfg.normalization.
/// rotate_flip emits exactly one transformed copy per base pair; scale adds
/// 0.6x/0.8x downscaled grids; dose_blend duplicates each pair with a random
/// blend of the two doses. Deterministic for a given seed.
std::vector<PatchPair> make_patch_set(const std::vector<std::pair<Image, Image>>& pairs,
                                      const PreprocessConfig& cfg, std::uint64_t seed);

/// Bilinear resampling to a new size (used by the scale augmentation).
Image resize_bilinear(const Image& img, int new_width, int new_height);

} // namespace ctbench
