#include <doctest/doctest.h>

#include <fstream>

#include "ctbench/errors.hpp"
#include "ctbench/plot.hpp"
#include "helpers.hpp"

using namespace ctbench;

namespace {

std::vector<char> file_bytes(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return std::vector<char>(std::istreambuf_iterator<char>(in), {});
}

PlotSeries ramp_series() {
    PlotSeries s;
    for (int i = 0; i < 40; ++i) {
        s.x.push_back(0.1 * i);
        s.y.push_back(1.0 + 0.5 * i);
    }
    s.color = {200, 40, 40};
    s.label = "RAMP";
    return s;
}

} // namespace

TEST_SUITE("plot") {

TEST_CASE("writes a deterministic png") {
    const auto dir = testutil::temp_dir("plot_basic");
    PlotOptions opt;
    opt.title = "MTF (900 HU)";
    opt.x_label = "lp/mm";
    opt.y_label = "MTF";

    write_line_plot_png({ramp_series()}, opt, dir / "a.png");
    write_line_plot_png({ramp_series()}, opt, dir / "b.png");

    const auto a = file_bytes(dir / "a.png");
    CHECK(a.size() > 1000);
    CHECK(static_cast<unsigned char>(a[0]) == 0x89);
    CHECK(a[1] == 'P');
    CHECK(a == file_bytes(dir / "b.png"));

    PlotSeries other = ramp_series();
    other.y[5] += 3.0;
    write_line_plot_png({ramp_series(), other}, opt, dir / "c.png");
    CHECK(file_bytes(dir / "c.png") != a);
}

TEST_CASE("log axis drops non-positive samples") {
    const auto dir = testutil::temp_dir("plot_log");
    PlotSeries s;
    s.x = {0.0, 1.0, 2.0, 3.0};
    s.y = {0.0, -2.0, 10.0, 1000.0};
    PlotOptions opt;
    opt.log_y = true;
    write_line_plot_png({s}, opt, dir / "log.png");
    CHECK(std::filesystem::file_size(dir / "log.png") > 1000);

    // a curve with no positive sample has nothing left to draw
    PlotSeries dead;
    dead.x = {0.0, 1.0};
    dead.y = {0.0, -1.0};
    CHECK_THROWS_AS(write_line_plot_png({dead}, opt, dir / "dead.png"), DataError);
}

TEST_CASE("degenerate ranges still render") {
    const auto dir = testutil::temp_dir("plot_flat");
    PlotSeries s;
    s.x = {2.0, 2.0, 2.0};
    s.y = {5.0, 5.0, 5.0};
    write_line_plot_png({s}, PlotOptions{}, dir / "flat.png");
    CHECK(std::filesystem::file_size(dir / "flat.png") > 1000);

    PlotSeries one;
    one.x = {0.5};
    one.y = {-3.0};
    write_line_plot_png({one}, PlotOptions{}, dir / "one.png");
    CHECK(std::filesystem::file_size(dir / "one.png") > 1000);
}

TEST_CASE("input validation") {
    const auto dir = testutil::temp_dir("plot_bad");
    CHECK_THROWS_AS(write_line_plot_png({}, PlotOptions{}, dir / "x.png"), DataError);

    PlotSeries mismatch;
    mismatch.x = {0.0, 1.0};
    mismatch.y = {0.0};
    CHECK_THROWS_AS(write_line_plot_png({mismatch}, PlotOptions{}, dir / "x.png"), DataError);

    PlotOptions tiny;
    tiny.width = 100;
    tiny.height = 60;
    CHECK_THROWS_AS(write_line_plot_png({ramp_series()}, tiny, dir / "x.png"), DataError);
}

} // TEST_SUITE
