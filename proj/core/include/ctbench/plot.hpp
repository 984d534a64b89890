#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace ctbench {

/// One polyline in plot coordinates.
struct PlotSeries {
    std::vector<double> x;
    std::vector<double> y;
    std::array<std::uint8_t, 3> color{0, 0, 0};
    std::string label;
};

struct PlotOptions {
    int width = 800;
    int height = 560;
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_y = false; ///< log10 axis; non-positive samples are dropped.
};

/// Minimal dependency-free line plot: axes, ticks, 5x7 bitmap labels
/// (digits, upper-case letters and basic punctuation), legend from series
/// labels. The CSVs next to these plots are the authoritative data.
void write_line_plot_png(const std::vector<PlotSeries>& series, const PlotOptions& opt,
                         const std::filesystem::path& path);

} // namespace ctbench
