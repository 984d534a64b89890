#include <doctest/doctest.h>

#include <algorithm>
#include <cmath>

#include "ctbench/errors.hpp"
#include "ctbench/phantom.hpp"
#include "helpers.hpp"

using namespace ctbench;

TEST_SUITE("phantom") {

TEST_CASE("contrast phantom layout") {
    const PhantomSpec spec = make_contrast_phantom();
    CHECK(spec.background_hu == -1000.0);
    CHECK(spec.body_hu == 0.0);
    CHECK(spec.body_radius_mm == 100.0);
    REQUIRE(spec.inserts.size() == 4);
    std::vector<double> hu;
    for (const auto& ins : spec.inserts) hu.push_back(ins.hu);
    std::sort(hu.begin(), hu.end());
    CHECK(hu == std::vector<double>{-35.0, 120.0, 340.0, 900.0});
    CHECK_NOTHROW(validate_phantom(spec));
}

TEST_CASE("water cylinder") {
    const PhantomSpec spec = make_water_cylinder();
    CHECK(spec.inserts.empty());
    CHECK(spec.body_hu == 0.0);
    CHECK(spec.body_radius_mm == 100.0);
}

TEST_CASE("validation rejects bad layouts") {
    PhantomSpec spec = make_water_cylinder(50.0);
    SUBCASE("insert outside the body") {
        spec.inserts.push_back({45.0, 0.0, 10.0, 120.0});
        CHECK_THROWS_AS(validate_phantom(spec), DataError);
    }
    SUBCASE("overlapping inserts") {
        spec.inserts.push_back({0.0, 0.0, 10.0, 120.0});
        spec.inserts.push_back({5.0, 0.0, 10.0, 340.0});
        CHECK_THROWS_AS(validate_phantom(spec), DataError);
    }
    SUBCASE("non-positive radius") {
        spec.body_radius_mm = 0.0;
        CHECK_THROWS_AS(validate_phantom(spec), DataError);
    }
}

TEST_CASE("analytic lookup precedence") {
    const PhantomSpec spec = make_contrast_phantom(100.0);
    const auto& ins = spec.inserts[1]; // 340 HU at +y
    CHECK(phantom_hu_at(spec, ins.cx_mm, ins.cy_mm) == 340.0);
    CHECK(phantom_hu_at(spec, 0.0, 0.0) == 0.0);
    CHECK(phantom_hu_at(spec, 150.0, 0.0) == -1000.0);
}

TEST_CASE("rasterization hits exact values away from edges") {
    const PhantomSpec spec = make_contrast_phantom(50.0);
    const Image img = rasterize(spec, 128, 128, 1.0, 4);
    const double c = (128 - 1) / 2.0;
    // pixel at the 340 HU insert center (0.55*50 mm at +y)
    const auto& ins = spec.inserts[1];
    const int px = static_cast<int>(std::lround(c + ins.cx_mm));
    const int py = static_cast<int>(std::lround(c + ins.cy_mm));
    CHECK(img.at(px, py) == 340.0f);
    CHECK(img.at(0, 0) == -1000.0f);
    CHECK(img.at(64, 64) == 0.0f);
}

TEST_CASE("edge pixels follow the analytic area fraction") {
    const PhantomSpec spec = make_water_cylinder(20.0);
    const int n = 64, ss = 8;
    const double spacing = 1.0;
    const Image img = rasterize(spec, n, n, spacing, ss);
    const double c = (n - 1) / 2.0;
    // walk the +x radius and check every boundary-straddling pixel
    int checked = 0;
    for (int x = 0; x < n; ++x) {
        const double x_mm = (x - c) * spacing;
        if (std::abs(std::abs(x_mm) - 20.0) > spacing) continue;
        // area fraction by dense subsampling (independent 256x oracle)
        double inside = 0.0;
        const int d = 256;
        for (int sy = 0; sy < d; ++sy)
            for (int sx = 0; sx < d; ++sx) {
                const double xx = x_mm + (sx + 0.5) / d - 0.5;
                const double yy = 0.0 + (sy + 0.5) / d - 0.5;
                if (xx * xx + yy * yy <= 400.0) inside += 1.0;
            }
        const double a = inside / (d * d);
        const double want = a * 0.0 + (1.0 - a) * -1000.0;
        CHECK(std::abs(img.at(x, n / 2) - want) <= 1000.0 / (2.0 * ss * ss) + 1e-6);
        ++checked;
    }
    CHECK(checked >= 2);
}

TEST_CASE("rasterize rejects a body larger than the canvas") {
    CHECK_THROWS_AS(rasterize(make_water_cylinder(100.0), 64, 64, 0.5, 2), DataError);
    CHECK_THROWS_AS(rasterize(make_water_cylinder(10.0), 64, 64, 0.5, 0), DataError);
    CHECK_THROWS_AS(rasterize(make_water_cylinder(10.0), 64, 64, 0.5, 17), DataError);
}

TEST_CASE("json round-trip") {
    const PhantomSpec spec = make_contrast_phantom(80.0);
    const PhantomSpec back = phantom_from_json(phantom_to_json(spec));
    CHECK(back.body_radius_mm == spec.body_radius_mm);
    REQUIRE(back.inserts.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(back.inserts[i].hu == spec.inserts[i].hu);
        CHECK(back.inserts[i].cx_mm == doctest::Approx(spec.inserts[i].cx_mm));
    }
    CHECK_THROWS_AS(phantom_from_json("{"), DataError);
    CHECK_THROWS_AS(phantom_from_json(R"({"body_radius_mm": 1})"), DataError);

    const auto dir = testutil::temp_dir("phantom_io");
    write_phantom(spec, dir / "p.json");
    CHECK(read_phantom(dir / "p.json").inserts.size() == 4);
}

} // TEST_SUITE
