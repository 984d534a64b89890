#include "ctbench/image.hpp"

#include <algorithm>
#include <cmath>

#include "ctbench/errors.hpp"

namespace ctbench {

Image make_image(int width, int height, double pixel_spacing_mm, float fill) {
    if (width <= 0 || height <= 0)
        throw DataError("image dimensions must be positive");
    if (!(pixel_spacing_mm > 0.0) || !std::isfinite(pixel_spacing_mm))
        throw DataError("pixel spacing must be positive and finite");
    Image img;
    img.width = width;
    img.height = height;
    img.pixel_spacing_mm = pixel_spacing_mm;
    img.data.assign(static_cast<std::size_t>(width) * height, fill);
    return img;
}

void validate_image(const Image& img) {
    if (img.width <= 0 || img.height <= 0)
        throw DataError("image dimensions must be positive");
    if (!(img.pixel_spacing_mm > 0.0) || !std::isfinite(img.pixel_spacing_mm))
        throw DataError("pixel spacing must be positive and finite");
    if (img.data.size() != static_cast<std::size_t>(img.width) * img.height)
        throw DataError("image buffer size does not match dimensions");
    for (float v : img.data)
        if (!std::isfinite(v)) throw DataError("image contains non-finite values");
}

static void check_roi(const Image& img, const Roi& roi) {
    if (roi.w <= 0 || roi.h <= 0) throw DataError("roi must have positive size");
    if (roi.x0 < 0 || roi.y0 < 0 || roi.x0 + roi.w > img.width || roi.y0 + roi.h > img.height)
        throw DataError("roi exceeds image bounds");
}

Image extract_roi(const Image& img, const Roi& roi) {
    check_roi(img, roi);
    Image out = make_image(roi.w, roi.h, img.pixel_spacing_mm);
    for (int y = 0; y < roi.h; ++y)
        for (int x = 0; x < roi.w; ++x) out.at(x, y) = img.at(roi.x0 + x, roi.y0 + y);
    return out;
}

std::vector<std::uint8_t> window_to_display(const Image& img, const DisplayWindow& win) {
    if (!(win.width_hu > 0.0)) throw DataError("display window width must be positive");
    const double lo = win.level_hu - win.width_hu / 2.0;
    std::vector<std::uint8_t> out(img.size());
    for (std::size_t i = 0; i < img.size(); ++i) {
        double t = (img.data[i] - lo) / win.width_hu * 255.0;
        out[i] = static_cast<std::uint8_t>(std::clamp(std::floor(t + 0.5), 0.0, 255.0));
    }
    return out;
}

double roi_mean(const Image& img, const Roi& roi) {
    check_roi(img, roi);
    double s = 0.0;
    for (int y = 0; y < roi.h; ++y)
        for (int x = 0; x < roi.w; ++x) s += img.at(roi.x0 + x, roi.y0 + y);
    return s / (static_cast<double>(roi.w) * roi.h);
}

double roi_variance(const Image& img, const Roi& roi) {
    check_roi(img, roi);
    const double n = static_cast<double>(roi.w) * roi.h;
    if (n < 2) throw DataError("variance needs at least 2 samples");
    const double mean = roi_mean(img, roi);
    double ss = 0.0;
    for (int y = 0; y < roi.h; ++y)
        for (int x = 0; x < roi.w; ++x) {
            const double d = img.at(roi.x0 + x, roi.y0 + y) - mean;
            ss += d * d;
        }
    return ss / (n - 1.0);
}

double sample_bilinear(const Image& img, double px, double py) {
    if (px <= -1.0 || py <= -1.0 || px >= img.width || py >= img.height) return 0.0;
    const int x0 = static_cast<int>(std::floor(px));
    const int y0 = static_cast<int>(std::floor(py));
    const double fx = px - x0;
    const double fy = py - y0;
    auto pick = [&](int x, int y) -> double {
        if (x < 0 || y < 0 || x >= img.width || y >= img.height) return 0.0;
        return img.at(x, y);
    };
    const double v00 = pick(x0, y0), v10 = pick(x0 + 1, y0);
    const double v01 = pick(x0, y0 + 1), v11 = pick(x0 + 1, y0 + 1);
    return (1.0 - fy) * ((1.0 - fx) * v00 + fx * v10) + fy * ((1.0 - fx) * v01 + fx * v11);
}

} // namespace ctbench
