#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "ctbench/image.hpp"

namespace ctbench {

// Images are stored as a pair of files: <name>.f32 (raw little-endian 32-bit
// IEEE-754 floats, row-major) plus a <name>.json sidecar with
// {"width", "height", "pixel_spacing_mm", "units": "HU"}.

/// Path of the .f32 payload for `path` (appends .f32 unless already present).
std::filesystem::path payload_path(const std::filesystem::path& path);
/// Path of the JSON sidecar next to the payload.
std::filesystem::path sidecar_path(const std::filesystem::path& path);

/// Round-trips bit-exactly with write_image. Throws DataError on missing file,
/// malformed sidecar, payload/sidecar length mismatch, or non-finite values.
Image read_image(const std::filesystem::path& path);
void write_image(const Image& img, const std::filesystem::path& path);

// Raw float payload helpers shared by sinogram / NPS / weights files.
std::vector<float> read_f32_payload(const std::filesystem::path& path, std::size_t expected_count);
void write_f32_payload(const std::vector<float>& values, const std::filesystem::path& path);

// Minimal deterministic PNG writers (zlib-backed, fixed compression level).
void write_png_gray8(const std::filesystem::path& path, int width, int height,
                     const std::vector<std::uint8_t>& pixels);
void write_png_rgb8(const std::filesystem::path& path, int width, int height,
                    const std::vector<std::uint8_t>& pixels);

/// Windowed grayscale render of an image.
void write_windowed_png(const Image& img, const DisplayWindow& win,
                        const std::filesystem::path& path);

} // namespace ctbench
