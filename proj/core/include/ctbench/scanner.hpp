#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "ctbench/image.hpp"

namespace ctbench {

enum class ReconKernel { sharp, smooth };

/// Parallel-beam acquisition over 180 degrees. Detector row is centered on the
/// rotation axis; i0 is the unattenuated photon count per detector element.
struct ScanGeometry {
    int n_views = 720;
    int n_detectors = 729;
    double detector_spacing_mm = 0.4;
    double i0 = 1e5;
    ReconKernel kernel = ReconKernel::sharp;
};

void validate_geometry(const ScanGeometry& g);

/// Line integrals of the attenuation map. data[v * n_detectors + d] is the
/// integral along the ray at angle v * pi / n_views and signed detector
/// offset (d - (n_detectors - 1) / 2) * detector_spacing_mm.
struct Sinogram {
    int n_views = 0;
    int n_detectors = 0;
    double detector_spacing_mm = 0.0;
    std::vector<float> data;

    float& at(int view, int det) { return data[static_cast<std::size_t>(view) * n_detectors + det]; }
    float at(int view, int det) const { return data[static_cast<std::size_t>(view) * n_detectors + det]; }
};

void validate_sinogram(const Sinogram& s);

inline constexpr double kMuWaterPerMm = 0.019;

/// HU -> linear attenuation (1/mm), clamped at zero.
Image hu_to_mu(const Image& hu, double mu_water_per_mm = kMuWaterPerMm);
/// Linear attenuation (1/mm) -> HU.
Image mu_to_hu(const Image& mu, double mu_water_per_mm = kMuWaterPerMm);

/// Ray-driven parallel-beam projection of an attenuation image (units 1/mm).
/// Samples every pixel_spacing/2 along each ray with bilinear interpolation.
Sinogram forward_project(const Image& mu, const ScanGeometry& g);

/// Transmission-domain Poisson noise at a dose fraction in (0, 1]:
/// N ~ Poisson(dose * i0 * exp(-p)), p' = ln(dose * i0) - ln(max(N, 1)).
/// dose = 1 is a normal-dose scan; the same seed reproduces the same noise.
Sinogram add_poisson_noise(const Sinogram& sino, const ScanGeometry& g, double dose,
                           std::uint64_t seed);

/// Frequency response of the reconstruction filter at n equally spaced
/// frequencies in [0, Nyquist]; used by fbp and exposed for testing.
std::vector<double> filter_response(ReconKernel kernel, int n, double detector_spacing_mm);

/// Filtered backprojection onto a width x height grid centered on the rotation
/// axis. The sinogram's ray transform of the result approximates the input.
Image fbp(const Sinogram& sino, const ScanGeometry& g, int width, int height,
          double pixel_spacing_mm, double mu_water_per_mm = kMuWaterPerMm);

/// Rasterized phantom (HU) -> noisy reconstruction (HU) in one call.
Image simulate_scan(const Image& phantom_hu, const ScanGeometry& g, double dose,
                    std::uint64_t seed, double mu_water_per_mm = kMuWaterPerMm);

// Sinogram container I/O (.f32 payload + JSON sidecar), mirroring image I/O.
Sinogram read_sinogram(const std::filesystem::path& path);
void write_sinogram(const Sinogram& sino, const std::filesystem::path& path);

} // namespace ctbench
