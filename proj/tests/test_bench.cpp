#include <doctest/doctest.h>

#include <cmath>
#include <fstream>

#include "ctbench/bench.hpp"
#include "ctbench/denoiser.hpp"
#include "ctbench/errors.hpp"
#include "ctbench/phantom.hpp"
#include "helpers.hpp"

using namespace ctbench;

namespace {

// 900 HU disk on a water body, rasterized crisp
Image disk_image(double* out_radius = nullptr) {
    PhantomSpec spec = make_water_cylinder(25.0);
    spec.inserts.push_back({0.0, 0.0, 8.0, 900.0});
    if (out_radius) *out_radius = 8.0;
    return rasterize(spec, 128, 128, 0.5, 8);
}

} // namespace

TEST_SUITE("bench") {

TEST_CASE("mtf of a crisp disk") {
    const Image img = disk_image();
    const DiskInsert ins{0.0, 0.0, 8.0, 900.0};
    const MtfCurve mtf = mtf_from_disk(img, ins, 0.0);
    REQUIRE(!mtf.freqs.empty());
    REQUIRE(mtf.freqs.size() == mtf.values.size());
    CHECK(mtf.values[0] == doctest::Approx(1.0));
    for (std::size_t i = 1; i < mtf.freqs.size(); ++i) CHECK(mtf.freqs[i] > mtf.freqs[i - 1]);
    CHECK(mtf.freqs.back() <= 1.0 / (2.0 * img.pixel_spacing_mm) + 1e-9);
    // a supersampled rasterization is nearly pixel-limited
    CHECK(mtf.mtf50 >= 0.7 / (2.0 * img.pixel_spacing_mm));
}

TEST_CASE("gaussian blur transfers onto the mtf") {
    const Image img = disk_image();
    const DiskInsert ins{0.0, 0.0, 8.0, 900.0};
    const MtfCurve base = mtf_from_disk(img, ins, 0.0);

    const double sigma_px = 1.0;
    const double sigma_mm = sigma_px * img.pixel_spacing_mm;
    const auto blur = make_gaussian_denoiser(sigma_px);
    const MtfCurve got = mtf_from_disk(blur->apply(img, "x"), ins, 0.0);

    REQUIRE(got.freqs.size() == base.freqs.size());
    const double f_nyq = 1.0 / (2.0 * img.pixel_spacing_mm);
    for (std::size_t i = 0; i < got.freqs.size(); ++i) {
        const double f = got.freqs[i];
        if (f > 0.8 * f_nyq) break;
        const double want =
            std::exp(-2.0 * M_PI * M_PI * sigma_mm * sigma_mm * f * f) * base.values[i];
        CHECK(std::abs(got.values[i] - want) < 0.05);
    }
    CHECK(got.mtf50 < base.mtf50);
}

TEST_CASE("mtf preconditions") {
    const Image img = disk_image();
    CHECK_THROWS_AS(mtf_from_disk(img, DiskInsert{0.0, 0.0, 8.0, 10.0}, 0.0), DataError);
    // 2x radius annulus pokes outside the 64 mm field
    CHECK_THROWS_AS(mtf_from_disk(img, DiskInsert{28.0, 0.0, 8.0, 900.0}, 0.0), DataError);
}

TEST_CASE("white-noise nps is flat and parseval-consistent") {
    const int n = 50, roi = 64;
    const double spacing = 0.5, sigma = 10.0;
    std::vector<Image> reals;
    for (int k = 0; k < n; ++k) reals.push_back(testutil::noise_image(96, 96, spacing, 0.0, sigma, 40 + k));
    const NpsResult nps = nps_estimate(reals, Roi{16, 16, roi, roi});

    CHECK(nps.roi_size == roi);
    CHECK(nps.n_realizations == n);
    CHECK(nps.delta_f == doctest::Approx(1.0 / (roi * spacing)));
    REQUIRE(nps.nps2d.size() == static_cast<std::size_t>(roi) * roi);
    REQUIRE(!nps.radial_freqs.empty());

    const double want = sigma * sigma * spacing * spacing;
    for (double v : nps.radial_values) CHECK(std::abs(v - want) / want < 0.15);
    CHECK(nps.radial_freqs[0] == doctest::Approx(nps.delta_f));

    // integral of the spectrum ~ noise variance (Parseval)
    CHECK(std::abs(nps_integral(nps) - sigma * sigma) / (sigma * sigma) < 0.05);

    // detrending kills the DC cell
    const double dc = nps.nps2d[(roi / 2) * roi + roi / 2];
    CHECK(dc < 0.05 * want);
    for (double v : nps.nps2d) CHECK(v >= 0.0);
}

TEST_CASE("identical realizations have zero nps") {
    const Image one = testutil::noise_image(64, 64, 0.5, 0.0, 50.0, 9);
    const std::vector<Image> reals(10, one);
    const NpsResult nps = nps_estimate(reals, Roi{0, 0, 64, 64});
    for (double v : nps.nps2d) CHECK(v == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("nps preconditions") {
    std::vector<Image> reals{testutil::noise_image(32, 32, 1.0, 0.0, 1.0, 1)};
    CHECK_THROWS_AS(nps_estimate(reals, Roi{0, 0, 16, 16}), DataError); // needs >= 2
    reals.push_back(testutil::noise_image(32, 32, 1.0, 0.0, 1.0, 2));
    CHECK_THROWS_AS(nps_estimate(reals, Roi{0, 0, 16, 8}), DataError); // square only
    CHECK_THROWS_AS(nps_estimate(reals, Roi{20, 20, 16, 16}), DataError);
    reals.push_back(testutil::noise_image(16, 16, 1.0, 0.0, 1.0, 3));
    CHECK_THROWS_AS(nps_estimate(reals, Roi{0, 0, 16, 16}), DataError); // shape mismatch
}

TEST_CASE("line profile through an insert") {
    PhantomSpec spec = make_water_cylinder(25.0);
    spec.inserts.push_back({10.0, -5.0, 6.0, 340.0});
    const Image img = rasterize(spec, 128, 128, 0.5, 8);

    const LineProfile p = line_profile(img, spec, 0, ProfileAxis::horizontal);
    REQUIRE(!p.positions_mm.empty());
    CHECK(p.positions_mm.size() == p.values_hu.size());
    CHECK(p.positions_mm.size() == p.reference_hu.size());
    // spans three insert diameters at pixel steps
    CHECK(std::abs(static_cast<double>(p.positions_mm.size()) - 6.0 * 6.0 / 0.5) <= 2.0);
    for (std::size_t i = 1; i < p.positions_mm.size(); ++i)
        CHECK(p.positions_mm[i] > p.positions_mm[i - 1]);

    for (std::size_t i = 0; i < p.positions_mm.size(); ++i) {
        // interior of the disk: rasterization and reference agree exactly
        if (std::abs(p.positions_mm[i]) < 6.0 - 1.0) {
            CHECK(p.values_hu[i] == doctest::Approx(340.0));
            CHECK(p.reference_hu[i] == 340.0);
        }
    }

    const LineProfile v = line_profile(img, spec, 0, ProfileAxis::vertical);
    CHECK(!v.positions_mm.empty());
    CHECK_THROWS_AS(line_profile(img, spec, 1, ProfileAxis::horizontal), DataError);
}

TEST_CASE("hu accuracy statistics") {
    LineProfile p;
    const int half = 20;
    for (int i = -half; i <= half; ++i) {
        p.positions_mm.push_back(i * 0.5);
        const double ref = std::abs(i) <= 10 ? 340.0 : 0.0;
        p.reference_hu.push_back(ref);
        p.values_hu.push_back(ref);
    }

    SUBCASE("exact profile scores zero") {
        const HuAccuracy acc = hu_accuracy(p);
        CHECK(acc.plateau_bias == 0.0);
        CHECK(acc.plateau_mad == 0.0);
        CHECK(acc.edge_overshoot == 0.0);
    }
    SUBCASE("constant shift moves all three by the shift") {
        for (auto& v : p.values_hu) v += 10.0;
        const HuAccuracy acc = hu_accuracy(p);
        CHECK(acc.plateau_bias == doctest::Approx(10.0));
        CHECK(acc.plateau_mad == doctest::Approx(10.0));
        CHECK(acc.edge_overshoot == doctest::Approx(10.0));
    }
    SUBCASE("bias and mad disagree under zero-mean error") {
        // alternate +-8 HU on the plateau: bias ~ 0, mad = 8
        for (std::size_t i = 0; i < p.values_hu.size(); ++i)
            if (p.reference_hu[i] == 340.0) p.values_hu[i] += (i % 2 == 0) ? 8.0 : -8.0;
        const HuAccuracy acc = hu_accuracy(p);
        CHECK(std::abs(acc.plateau_bias) < 2.0);
        CHECK(acc.plateau_mad == doctest::Approx(8.0));
    }
    SUBCASE("too-short plateau is rejected") {
        LineProfile tiny;
        for (int i = -3; i <= 3; ++i) {
            tiny.positions_mm.push_back(i * 0.5);
            tiny.reference_hu.push_back(i == 0 ? 340.0 : 0.0);
            tiny.values_hu.push_back(0.0);
        }
        CHECK_THROWS_AS(hu_accuracy(tiny), DataError);
    }
}

TEST_CASE("absolute difference image") {
    const Image a = testutil::noise_image(16, 16, 1.0, 0.0, 10.0, 11);
    const Image b = testutil::noise_image(16, 16, 1.0, 0.0, 10.0, 12);
    const Image d = abs_diff(a, b);
    const Image d2 = abs_diff(b, a);
    CHECK(d == d2);
    for (std::size_t i = 0; i < d.size(); ++i) {
        CHECK(d.data[i] >= 0.0f);
        CHECK(d.data[i] == doctest::Approx(std::abs(a.data[i] - b.data[i])));
    }
    const Image z = abs_diff(a, a);
    CHECK(*std::max_element(z.data.begin(), z.data.end()) == 0.0f);
    CHECK_THROWS_AS(abs_diff(a, testutil::const_image(8, 8, 1.0, 0.0f)), DataError);
}

TEST_CASE("csv and raster writers") {
    const auto dir = testutil::temp_dir("bench_io");

    MtfCurve mtf;
    for (int i = 0; i < 10; ++i) {
        mtf.freqs.push_back(0.1 * i);
        mtf.values.push_back(1.0 - 0.09 * i);
    }
    mtf.mtf50 = 0.55;
    write_mtf_csv(mtf, dir / "mtf.csv");
    const MtfCurve back = read_mtf_csv(dir / "mtf.csv");
    REQUIRE(back.freqs.size() == 10);
    CHECK(back.freqs[3] == doctest::Approx(0.3));
    CHECK(back.values[3] == doctest::Approx(0.73));

    std::ifstream in(dir / "mtf.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header == "freq_lp_per_mm,mtf");

    write_mtf_summary({{900.0, 0.8}, {-35.0, 0.55}}, dir / "mtf50.json");
    std::ifstream js(dir / "mtf50.json");
    const std::string txt((std::istreambuf_iterator<char>(js)), {});
    CHECK(txt.find("900") != std::string::npos);
    CHECK(txt.find("-35") != std::string::npos);

    std::vector<Image> reals;
    for (int k = 0; k < 4; ++k) reals.push_back(testutil::noise_image(32, 32, 0.5, 0.0, 5.0, k));
    const NpsResult nps = nps_estimate(reals, Roi{0, 0, 32, 32});
    write_nps_csv(nps, dir / "nps.csv");
    write_nps_2d(nps, dir / "nps2d.f32");
    write_nps_png(nps, dir / "nps2d.png");
    std::ifstream nin(dir / "nps.csv");
    std::getline(nin, header);
    CHECK(header == "freq_lp_per_mm,nps_hu2_mm2");
    CHECK(std::filesystem::file_size(dir / "nps2d.f32") == 32 * 32 * 4);
    CHECK(std::filesystem::exists(dir / "nps2d.json"));
    CHECK(std::filesystem::file_size(dir / "nps2d.png") > 100);

    LineProfile p;
    p.positions_mm = {-1.0, 0.0, 1.0};
    p.values_hu = {0.0, 300.0, 0.0};
    p.reference_hu = {0.0, 340.0, 0.0};
    write_profile_csv(p, dir / "profile.csv");
    std::ifstream pin(dir / "profile.csv");
    std::getline(pin, header);
    CHECK(header == "pos_mm,hu,ref_hu");
    std::string line;
    std::getline(pin, line);
    CHECK(line == "-1,0,0");
}

} // TEST_SUITE
