#include "ctbench/phantom.hpp"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "ctbench/errors.hpp"
#include "ctbench/parallel.hpp"

namespace ctbench {

void validate_phantom(const PhantomSpec& spec) {
    if (!(spec.body_radius_mm > 0.0)) throw DataError("body radius must be positive");
    const auto& ins = spec.inserts;
    for (std::size_t i = 0; i < ins.size(); ++i) {
        if (!(ins[i].radius_mm > 0.0)) throw DataError("insert radius must be positive");
        const double d = std::hypot(ins[i].cx_mm, ins[i].cy_mm);
        if (d + ins[i].radius_mm > spec.body_radius_mm + 1e-9)
            throw DataError("insert " + std::to_string(i) + " extends outside the body");
        for (std::size_t j = i + 1; j < ins.size(); ++j) {
            const double dij = std::hypot(ins[i].cx_mm - ins[j].cx_mm, ins[i].cy_mm - ins[j].cy_mm);
            if (dij < ins[i].radius_mm + ins[j].radius_mm - 1e-9)
                throw DataError("inserts " + std::to_string(i) + " and " + std::to_string(j) +
                                " overlap");
        }
    }
}

PhantomSpec make_contrast_phantom(double body_radius_mm) {
    PhantomSpec spec;
    spec.background_hu = -1000.0;
    spec.body_radius_mm = body_radius_mm;
    spec.body_hu = 0.0;
    const double ring = 0.55 * body_radius_mm;
    const double r = 0.12 * body_radius_mm;
    const double hu[4] = {900.0, 340.0, 120.0, -35.0};
    for (int k = 0; k < 4; ++k) {
        const double a = k * (M_PI / 2.0); // 0/90/180/270 deg, x right, y down
        spec.inserts.push_back({ring * std::cos(a), ring * std::sin(a), r, hu[k]});
    }
    validate_phantom(spec);
    return spec;
}

PhantomSpec make_water_cylinder(double body_radius_mm) {
    PhantomSpec spec;
    spec.background_hu = -1000.0;
    spec.body_radius_mm = body_radius_mm;
    spec.body_hu = 0.0;
    validate_phantom(spec);
    return spec;
}

double phantom_hu_at(const PhantomSpec& spec, double x_mm, double y_mm) {
    for (const auto& ins : spec.inserts) {
        const double dx = x_mm - ins.cx_mm;
        const double dy = y_mm - ins.cy_mm;
        if (dx * dx + dy * dy <= ins.radius_mm * ins.radius_mm) return ins.hu;
    }
    if (x_mm * x_mm + y_mm * y_mm <= spec.body_radius_mm * spec.body_radius_mm)
        return spec.body_hu;
    return spec.background_hu;
}

Image rasterize(const PhantomSpec& spec, int width, int height, double pixel_spacing_mm,
                int supersample) {
    validate_phantom(spec);
    if (supersample < 1 || supersample > 16)
        throw DataError("supersample must be in [1, 16]");
    if (width <= 0 || height <= 0 || !(pixel_spacing_mm > 0.0))
        throw DataError("bad canvas");
    const double half_w = width * pixel_spacing_mm / 2.0;
    const double half_h = height * pixel_spacing_mm / 2.0;
    if (spec.body_radius_mm > std::min(half_w, half_h) + 1e-9)
        throw DataError("body does not fit in the canvas");

    Image img = make_image(width, height, pixel_spacing_mm);
    const double cx = (width - 1) / 2.0;
    const double cy = (height - 1) / 2.0;
    const int s = supersample;
    parallel_for(0, height, [&](std::int64_t y0, std::int64_t y1) {
        for (std::int64_t y = y0; y < y1; ++y) {
            for (int x = 0; x < width; ++x) {
                double acc = 0.0;
                for (int sy = 0; sy < s; ++sy) {
                    const double yy = (y - cy + (sy + 0.5) / s - 0.5) * pixel_spacing_mm;
                    for (int sx = 0; sx < s; ++sx) {
                        const double xx = (x - cx + (sx + 0.5) / s - 0.5) * pixel_spacing_mm;
                        acc += phantom_hu_at(spec, xx, yy);
                    }
                }
                img.at(x, static_cast<int>(y)) = static_cast<float>(acc / (s * s));
            }
        }
    });
    return img;
}

static nlohmann::json to_json(const PhantomSpec& spec) {
    nlohmann::json inserts = nlohmann::json::array();
    for (const auto& ins : spec.inserts)
        inserts.push_back({{"cx_mm", ins.cx_mm},
                           {"cy_mm", ins.cy_mm},
                           {"radius_mm", ins.radius_mm},
                           {"hu", ins.hu}});
    return {{"background_hu", spec.background_hu},
            {"body_radius_mm", spec.body_radius_mm},
            {"body_hu", spec.body_hu},
            {"inserts", inserts}};
}

static PhantomSpec from_json(const nlohmann::json& j) {
    PhantomSpec spec;
    try {
        spec.background_hu = j.at("background_hu").get<double>();
        spec.body_radius_mm = j.at("body_radius_mm").get<double>();
        spec.body_hu = j.at("body_hu").get<double>();
        for (const auto& ji : j.value("inserts", nlohmann::json::array()))
            spec.inserts.push_back({ji.at("cx_mm").get<double>(), ji.at("cy_mm").get<double>(),
                                    ji.at("radius_mm").get<double>(), ji.at("hu").get<double>()});
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("phantom json: ") + e.what());
    }
    validate_phantom(spec);
    return spec;
}

std::string phantom_to_json(const PhantomSpec& spec) { return to_json(spec).dump(2) + "\n"; }

PhantomSpec phantom_from_json(const std::string& text) {
    try {
        return from_json(nlohmann::json::parse(text));
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError(std::string("phantom json: ") + e.what());
    }
}

PhantomSpec read_phantom(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return phantom_from_json(text);
}

void write_phantom(const PhantomSpec& spec, const std::filesystem::path& path) {
    validate_phantom(spec);
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out << phantom_to_json(spec);
}

} // namespace ctbench
