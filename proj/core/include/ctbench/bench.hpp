#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "ctbench/image.hpp"
#include "ctbench/phantom.hpp"

namespace ctbench {

/// Modulation transfer function measured from a disk insert edge.
struct MtfCurve {
    std::vector<double> freqs;  ///< lp/mm, ascending from 0, capped at Nyquist.
    std::vector<double> values; ///< dimensionless, values[0] == 1.
    double mtf50 = 0.0;         ///< first downward 0.5 crossing, lp/mm.
};

/// Circular-edge MTF: pixels are binned by radial distance from the insert
/// center into an oversampled edge-spread function (bin width = spacing/8),
/// smoothed by a 3-bin moving average, differentiated, Hann-tapered, and
/// Fourier transformed. Requires |insert.hu - background_hu| >= 20 and the
/// measurement annulus (2x insert radius) inside the image.
MtfCurve mtf_from_disk(const Image& img, const DiskInsert& insert, double background_hu);

/// Noise power spectrum of an image ensemble.
struct NpsResult {
    int roi_size = 0;                  ///< square ROI side, px.
    int n_realizations = 0;
    double delta_f = 0.0;              ///< frequency step 1/(roi_size * spacing), lp/mm.
    std::vector<double> nps2d;         ///< roi_size^2 values, HU^2 mm^2, DC at center.
    std::vector<double> radial_freqs;  ///< annular bin centers k * delta_f, k >= 1.
    std::vector<double> radial_values; ///< mean of nps2d over each annulus.
};

/// NPS(u,v) = dx*dy/(Nx*Ny) * mean_k |DFT2(noise ROI_k)|^2 where the noise
/// images are (realization - ensemble mean) * sqrt(n/(n-1)) and each ROI is
/// detrended by subtracting its best-fit plane. The DC bin stays in nps2d
/// (so Parseval sums work) but is left out of the radial curve.
NpsResult nps_estimate(const std::vector<Image>& realizations, const Roi& roi);

/// Sum of nps2d * delta_f^2 — equals the noise variance up to leakage.
double nps_integral(const NpsResult& nps);

enum class ProfileAxis { horizontal, vertical };

struct LineProfile {
    std::vector<double> positions_mm;  ///< along-line offsets from the insert center.
    std::vector<double> values_hu;     ///< bilinear samples of the image.
    std::vector<double> reference_hu;  ///< analytic phantom values at the same points.
};

/// Samples a line through insert_index's center along the given axis, spanning
/// three insert diameters (clamped to the image) at pixel-spacing steps.
LineProfile line_profile(const Image& img, const PhantomSpec& spec, int insert_index,
                         ProfileAxis axis);

struct HuAccuracy {
    double plateau_bias = 0.0;    ///< mean(values - reference) over the plateau.
    double plateau_mad = 0.0;     ///< mean |values - reference| over the plateau.
    double edge_overshoot = 0.0;  ///< max(values) - max(reference), full line.
};

/// Plateau = central 50% of the disk diameter (the contiguous run of peak
/// reference values around the center); requires at least 5 plateau samples.
HuAccuracy hu_accuracy(const LineProfile& profile);

/// Per-pixel |a - b|; inputs must share dimensions.
Image abs_diff(const Image& a, const Image& b);

// ---- report writers ------------------------------------------------------

/// CSV with header `freq_lp_per_mm,mtf`.
void write_mtf_csv(const MtfCurve& mtf, const std::filesystem::path& path);
MtfCurve read_mtf_csv(const std::filesystem::path& path);

/// JSON object mapping insert contrast (HU, as string key) to mtf50.
void write_mtf_summary(const std::map<double, double>& mtf50_by_contrast,
                       const std::filesystem::path& path);

/// CSV with header `freq_lp_per_mm,nps_hu2_mm2` (radial curve), plus the 2D
/// spectrum as `.f32` + JSON sidecar and a log-scaled PNG next to it.
void write_nps_csv(const NpsResult& nps, const std::filesystem::path& path);
void write_nps_2d(const NpsResult& nps, const std::filesystem::path& f32_path);
void write_nps_png(const NpsResult& nps, const std::filesystem::path& png_path);

/// CSV with header `pos_mm,hu,ref_hu`.
void write_profile_csv(const LineProfile& profile, const std::filesystem::path& path);

} // namespace ctbench
