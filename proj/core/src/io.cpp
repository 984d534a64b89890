#include "ctbench/io.hpp"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "ctbench/errors.hpp"

namespace ctbench {

std::filesystem::path payload_path(const std::filesystem::path& path) {
    if (path.extension() == ".f32") return path;
    std::filesystem::path p = path;
    if (p.extension() == ".json") p.replace_extension();
    p += ".f32";
    return p;
}

std::filesystem::path sidecar_path(const std::filesystem::path& path) {
    std::filesystem::path p = payload_path(path);
    p.replace_extension(".json");
    return p;
}

std::vector<float> read_f32_payload(const std::filesystem::path& path, std::size_t expected_count) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) throw DataError("cannot open " + path.string());
    const auto bytes = static_cast<std::size_t>(in.tellg());
    if (bytes != expected_count * sizeof(float))
        throw DataError(path.string() + ": expected " + std::to_string(expected_count * sizeof(float)) +
                        " bytes, found " + std::to_string(bytes));
    std::vector<float> values(expected_count);
    in.seekg(0);
    in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(bytes));
    if (!in) throw DataError("short read from " + path.string());
    return values;
}

void write_f32_payload(const std::vector<float>& values, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size() * sizeof(float)));
    if (!out) throw DataError("short write to " + path.string());
}

static nlohmann::json load_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

static void store_json(const nlohmann::json& j, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out << j.dump(2) << "\n";
}

Image read_image(const std::filesystem::path& path) {
    const auto meta = load_json(sidecar_path(path));
    Image img;
    try {
        img.width = meta.at("width").get<int>();
        img.height = meta.at("height").get<int>();
        img.pixel_spacing_mm = meta.at("pixel_spacing_mm").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError(sidecar_path(path).string() + ": " + e.what());
    }
    if (img.width <= 0 || img.height <= 0)
        throw DataError(sidecar_path(path).string() + ": bad dimensions");
    img.data = read_f32_payload(payload_path(path),
                                static_cast<std::size_t>(img.width) * img.height);
    validate_image(img);
    return img;
}

void write_image(const Image& img, const std::filesystem::path& path) {
    validate_image(img);
    write_f32_payload(img.data, payload_path(path));
    nlohmann::json meta{{"width", img.width},
                        {"height", img.height},
                        {"pixel_spacing_mm", img.pixel_spacing_mm},
                        {"units", "HU"}};
    store_json(meta, sidecar_path(path));
}

void write_windowed_png(const Image& img, const DisplayWindow& win,
                        const std::filesystem::path& path) {
    write_png_gray8(path, img.width, img.height, window_to_display(img, win));
}

} // namespace ctbench
