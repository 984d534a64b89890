#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

#include "ctbench/bench.hpp"
#include "ctbench/errors.hpp"
#include "ctbench/io.hpp"

namespace ctbench {

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    return out;
}

} // namespace

void write_mtf_csv(const MtfCurve& mtf, const std::filesystem::path& path) {
    auto out = open_out(path);
    out << "freq_lp_per_mm,mtf\n";
    for (std::size_t i = 0; i < mtf.freqs.size(); ++i)
        out << fmt(mtf.freqs[i]) << "," << fmt(mtf.values[i]) << "\n";
}

MtfCurve read_mtf_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != "freq_lp_per_mm,mtf")
        throw DataError(path.string() + ": bad header");
    MtfCurve mtf;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw DataError(path.string() + ": bad row");
        try {
            mtf.freqs.push_back(std::stod(line.substr(0, comma)));
            mtf.values.push_back(std::stod(line.substr(comma + 1)));
        } catch (const std::exception&) {
            throw DataError(path.string() + ": bad row");
        }
    }
    if (mtf.freqs.empty()) throw DataError(path.string() + ": empty curve");
    mtf.mtf50 = mtf.freqs.back();
    for (std::size_t k = 1; k < mtf.values.size(); ++k)
        if (mtf.values[k - 1] >= 0.5 && mtf.values[k] < 0.5) {
            const double f = (mtf.values[k - 1] - 0.5) / (mtf.values[k - 1] - mtf.values[k]);
            mtf.mtf50 = mtf.freqs[k - 1] + f * (mtf.freqs[k] - mtf.freqs[k - 1]);
            break;
        }
    return mtf;
}

void write_mtf_summary(const std::map<double, double>& mtf50_by_contrast,
                       const std::filesystem::path& path) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [contrast, mtf50] : mtf50_by_contrast) j[fmt(contrast)] = mtf50;
    auto out = open_out(path);
    out << j.dump(2) << "\n";
}

void write_nps_csv(const NpsResult& nps, const std::filesystem::path& path) {
    auto out = open_out(path);
    out << "freq_lp_per_mm,nps_hu2_mm2\n";
    for (std::size_t i = 0; i < nps.radial_freqs.size(); ++i)
        out << fmt(nps.radial_freqs[i]) << "," << fmt(nps.radial_values[i]) << "\n";
}

void write_nps_2d(const NpsResult& nps, const std::filesystem::path& f32_path) {
    std::vector<float> payload(nps.nps2d.begin(), nps.nps2d.end());
    write_f32_payload(payload, payload_path(f32_path));
    nlohmann::json meta{{"width", nps.roi_size},
                        {"height", nps.roi_size},
                        {"delta_f_lp_per_mm", nps.delta_f},
                        {"n_realizations", nps.n_realizations},
                        {"units", "HU2.mm2"}};
    auto out = open_out(sidecar_path(f32_path));
    out << meta.dump(2) << "\n";
}

void write_nps_png(const NpsResult& nps, const std::filesystem::path& png_path) {
    const int n = nps.roi_size;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    std::vector<double> logv(nps.nps2d.size());
    for (std::size_t i = 0; i < nps.nps2d.size(); ++i) {
        logv[i] = std::log10(nps.nps2d[i] + 1e-12);
        lo = std::min(lo, logv[i]);
        hi = std::max(hi, logv[i]);
    }
    if (!(hi > lo)) hi = lo + 1.0;
    std::vector<std::uint8_t> px(logv.size());
    for (std::size_t i = 0; i < logv.size(); ++i)
        px[i] = static_cast<std::uint8_t>(std::lround(255.0 * (logv[i] - lo) / (hi - lo)));
    write_png_gray8(png_path, n, n, px);
}

void write_profile_csv(const LineProfile& profile, const std::filesystem::path& path) {
    auto out = open_out(path);
    out << "pos_mm,hu,ref_hu\n";
    for (std::size_t i = 0; i < profile.positions_mm.size(); ++i)
        out << fmt(profile.positions_mm[i]) << "," << fmt(profile.values_hu[i]) << ","
            << fmt(profile.reference_hu[i]) << "\n";
}

} // namespace ctbench
