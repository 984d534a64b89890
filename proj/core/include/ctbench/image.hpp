#pragma once

#include <cstdint>
#include <vector>

namespace ctbench {

/// 2D grid of HU values, row-major, top-left origin, isotropic pixel spacing.
struct Image {
    int width = 0;
    int height = 0;
    double pixel_spacing_mm = 1.0;
    std::vector<float> data; // length = width * height

    float& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
    float at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
    std::size_t size() const { return data.size(); }
    bool same_shape(const Image& o) const { return width == o.width && height == o.height; }

    bool operator==(const Image& o) const = default;
};

Image make_image(int width, int height, double pixel_spacing_mm, float fill = 0.0f);

/// Throws DataError unless dimensions/size/spacing are consistent and all values finite.
void validate_image(const Image& img);

/// Rectangular pixel region; (x0, y0) is the top-left corner.
struct Roi {
    int x0 = 0;
    int y0 = 0;
    int w = 0;
    int h = 0;
};

Image extract_roi(const Image& img, const Roi& roi);

/// HU display window (W/L convention).
struct DisplayWindow {
    double width_hu = 400.0;
    double level_hu = 0.0;
};

/// Linear map of [level - width/2, level + width/2] HU onto [0, 255], clamped.
/// Midpoint rounding is half-up, so HU == level renders as 128.
std::vector<std::uint8_t> window_to_display(const Image& img, const DisplayWindow& win);

/// Bilinear sample at fractional pixel coordinates; points outside the grid
/// read as zero.
double sample_bilinear(const Image& img, double px, double py);

/// Mean HU over a region.
double roi_mean(const Image& img, const Roi& roi);
/// Unbiased (n-1) variance of HU over a region.
double roi_variance(const Image& img, const Roi& roi);

} // namespace ctbench
