#include <algorithm>
#include <cmath>

#include "ctbench/bench.hpp"
#include "ctbench/errors.hpp"

namespace ctbench {

LineProfile line_profile(const Image& img, const PhantomSpec& spec, int insert_index,
                         ProfileAxis axis) {
    validate_image(img);
    validate_phantom(spec);
    if (insert_index < 0 || insert_index >= static_cast<int>(spec.inserts.size()))
        throw DataError("invalid insert index " + std::to_string(insert_index));
    const DiskInsert& ins = spec.inserts[insert_index];
    const double spacing = img.pixel_spacing_mm;
    const double half_span = 3.0 * ins.radius_mm; // 3 insert diameters total
    const double cx = (img.width - 1) / 2.0;
    const double cy = (img.height - 1) / 2.0;

    LineProfile p;
    const int imax = static_cast<int>(std::floor(half_span / spacing));
    for (int i = -imax; i <= imax; ++i) {
        const double s = i * spacing;
        const double x_mm = ins.cx_mm + (axis == ProfileAxis::horizontal ? s : 0.0);
        const double y_mm = ins.cy_mm + (axis == ProfileAxis::vertical ? s : 0.0);
        const double px = x_mm / spacing + cx;
        const double py = y_mm / spacing + cy;
        if (px < 0.0 || py < 0.0 || px > img.width - 1 || py > img.height - 1)
            continue; // clamp the span to the image
        p.positions_mm.push_back(s);
        p.values_hu.push_back(sample_bilinear(img, px, py));
        p.reference_hu.push_back(phantom_hu_at(spec, x_mm, y_mm));
    }
    if (p.positions_mm.empty()) throw DataError("profile lies outside the image");
    return p;
}

HuAccuracy hu_accuracy(const LineProfile& profile) {
    const std::size_t n = profile.positions_mm.size();
    if (n == 0 || profile.values_hu.size() != n || profile.reference_hu.size() != n)
        throw DataError("degenerate profile");

    // The disk shows up as the contiguous run of constant reference values
    // around the line center; the plateau is the central half of that run.
    std::size_t center = 0;
    double best = std::abs(profile.positions_mm[0]);
    for (std::size_t i = 1; i < n; ++i) {
        const double d = std::abs(profile.positions_mm[i]);
        if (d < best) {
            best = d;
            center = i;
        }
    }
    const double disk_hu = profile.reference_hu[center];
    std::size_t lo = center, hi = center;
    while (lo > 0 && profile.reference_hu[lo - 1] == disk_hu) --lo;
    while (hi + 1 < n && profile.reference_hu[hi + 1] == disk_hu) ++hi;
    const std::size_t run = hi - lo + 1;
    const std::size_t trim = run / 4; // keep the central 50%
    lo += trim;
    hi -= trim;
    if (hi < lo || hi - lo + 1 < 5) throw DataError("fewer than 5 plateau samples");

    HuAccuracy acc;
    for (std::size_t i = lo; i <= hi; ++i) {
        const double d = profile.values_hu[i] - profile.reference_hu[i];
        acc.plateau_bias += d;
        acc.plateau_mad += std::abs(d);
    }
    const double m = static_cast<double>(hi - lo + 1);
    acc.plateau_bias /= m;
    acc.plateau_mad /= m;
    acc.edge_overshoot = *std::max_element(profile.values_hu.begin(), profile.values_hu.end()) -
                         *std::max_element(profile.reference_hu.begin(), profile.reference_hu.end());
    return acc;
}

Image abs_diff(const Image& a, const Image& b) {
    validate_image(a);
    validate_image(b);
    if (!a.same_shape(b)) throw DataError("images must share dimensions");
    Image out = a;
    for (std::size_t i = 0; i < out.size(); ++i)
        out.data[i] = std::abs(a.data[i] - b.data[i]);
    return out;
}

} // namespace ctbench
