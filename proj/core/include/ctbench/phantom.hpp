#pragma once

#include <filesystem>
#include <vector>

#include "ctbench/image.hpp"

namespace ctbench {

/// Circular insert. Center is in mm from the image center, x right, y down.
struct DiskInsert {
    double cx_mm = 0.0;
    double cy_mm = 0.0;
    double radius_mm = 1.0;
    double hu = 0.0;
};

/// Analytic test object: circular body on a uniform background plus disk inserts.
struct PhantomSpec {
    double background_hu = -1000.0;
    double body_radius_mm = 100.0;
    double body_hu = 0.0;
    std::vector<DiskInsert> inserts;
};

/// Throws DataError unless all inserts lie inside the body and are pairwise disjoint.
void validate_phantom(const PhantomSpec& spec);

/// Water body (0 HU) on air with four contrast inserts at 900, 340, 120, -35 HU,
/// in that order, on a ring of radius 0.55 * body radius at 0/90/180/270 degrees
/// (from +x, y down). Insert radius is 0.12 * body radius.
PhantomSpec make_contrast_phantom(double body_radius_mm = 100.0);

/// Uniform water cylinder (0 HU) on air, no inserts.
PhantomSpec make_water_cylinder(double body_radius_mm = 100.0);

/// Analytic HU at a point (inserts take precedence over body, body over background).
double phantom_hu_at(const PhantomSpec& spec, double x_mm, double y_mm);

/// Anti-aliased rasterization: each pixel is the mean HU over supersample^2
/// subsamples. supersample must be in [1, 16]; the body must fit in the canvas.
Image rasterize(const PhantomSpec& spec, int width, int height, double pixel_spacing_mm,
                int supersample = 8);

// JSON (de)serialization matching the on-disk phantom format.
PhantomSpec read_phantom(const std::filesystem::path& path);
void write_phantom(const PhantomSpec& spec, const std::filesystem::path& path);
std::string phantom_to_json(const PhantomSpec& spec);
PhantomSpec phantom_from_json(const std::string& text);

} // namespace ctbench
