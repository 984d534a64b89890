#include <doctest/doctest.h>

#include <fstream>

#include "ctbench/errors.hpp"
#include "ctbench/image.hpp"
#include "ctbench/io.hpp"
#include "helpers.hpp"

using namespace ctbench;

TEST_SUITE("image") {

TEST_CASE("round-trips HU values bitwise") {
    Image img = make_image(2, 2, 0.5);
    img.data = {-1000.0f, 0.0f, 120.0f, 900.0f};
    const auto dir = testutil::temp_dir("image_rt");
    write_image(img, dir / "a.f32");
    const Image back = read_image(dir / "a.f32");
    CHECK(back == img);
}

TEST_CASE("rejects payload/sidecar length mismatch") {
    Image img = make_image(4, 4, 0.5);
    const auto dir = testutil::temp_dir("image_mismatch");
    write_image(img, dir / "a.f32");
    // drop the last 4 bytes of the payload
    std::filesystem::resize_file(dir / "a.f32", 4 * 4 * 4 - 4);
    CHECK_THROWS_AS(read_image(dir / "a.f32"), DataError);
}

TEST_CASE("validates shape and finiteness") {
    Image img = make_image(2, 2, 0.5);
    CHECK_NOTHROW(validate_image(img));
    img.data[3] = std::numeric_limits<float>::quiet_NaN();
    CHECK_THROWS_AS(validate_image(img), DataError);
    img.data[3] = 0.0f;
    img.pixel_spacing_mm = 0.0;
    CHECK_THROWS_AS(validate_image(img), DataError);
    img.pixel_spacing_mm = 0.5;
    img.data.pop_back();
    CHECK_THROWS_AS(validate_image(img), DataError);
}

TEST_CASE("roi extraction") {
    Image img = make_image(3, 2, 1.0);
    for (std::size_t i = 0; i < img.size(); ++i) img.data[i] = static_cast<float>(i);

    SUBCASE("full-image roi is the identity") {
        CHECK(extract_roi(img, Roi{0, 0, 3, 2}) == img);
    }
    SUBCASE("1x1 roi picks one pixel") {
        const Image one = extract_roi(img, Roi{0, 0, 1, 1});
        CHECK(one.width == 1);
        CHECK(one.data[0] == img.data[0]);
    }
    SUBCASE("roi past the edge is rejected") {
        CHECK_THROWS_AS(extract_roi(img, Roi{2, 0, 2, 2}), DataError);
        CHECK_THROWS_AS(extract_roi(img, Roi{0, 0, 3, 3}), DataError);
        CHECK_THROWS_AS(extract_roi(img, Roi{0, 0, 0, 1}), DataError);
    }
}

TEST_CASE("display windowing") {
    Image img = make_image(5, 1, 1.0);
    const DisplayWindow win{400.0, 0.0};
    img.data = {0.0f, -200.0f, 200.0f, -500.0f, 500.0f};
    const auto px = window_to_display(img, win);
    CHECK(px[0] == 128); // HU at the level rounds up from 127.5
    CHECK(px[1] == 0);
    CHECK(px[2] == 255);
    CHECK(px[3] == 0);   // below lo clamps
    CHECK(px[4] == 255); // above hi clamps

    // soft-tissue window from the figure convention: W=491, L=62
    Image hu = make_image(1, 1, 1.0);
    hu.data = {static_cast<float>(62.0 + 245.5)};
    CHECK(window_to_display(hu, DisplayWindow{491.0, 62.0})[0] == 255);
}

TEST_CASE("bilinear sampling") {
    Image img = make_image(2, 2, 1.0);
    img.data = {0.0f, 10.0f, 20.0f, 30.0f};
    CHECK(sample_bilinear(img, 0.0, 0.0) == doctest::Approx(0.0));
    CHECK(sample_bilinear(img, 1.0, 0.0) == doctest::Approx(10.0));
    CHECK(sample_bilinear(img, 0.5, 0.5) == doctest::Approx(15.0));
    CHECK(sample_bilinear(img, 0.5, 0.0) == doctest::Approx(5.0));
    CHECK(sample_bilinear(img, -5.0, 0.0) == doctest::Approx(0.0)); // outside -> 0
}

TEST_CASE("roi statistics") {
    Image img = make_image(2, 2, 1.0);
    img.data = {1.0f, 2.0f, 3.0f, 4.0f};
    const Roi full{0, 0, 2, 2};
    CHECK(roi_mean(img, full) == doctest::Approx(2.5));
    CHECK(roi_variance(img, full) == doctest::Approx(5.0 / 3.0)); // sample variance
}

TEST_CASE("png writers are deterministic") {
    const auto dir = testutil::temp_dir("image_png");
    const Image img = testutil::noise_image(32, 24, 1.0, 0.0, 300.0, 5);
    write_windowed_png(img, DisplayWindow{400.0, 0.0}, dir / "a.png");
    write_windowed_png(img, DisplayWindow{400.0, 0.0}, dir / "b.png");
    std::ifstream fa(dir / "a.png", std::ios::binary), fb(dir / "b.png", std::ios::binary);
    const std::string sa((std::istreambuf_iterator<char>(fa)), {});
    const std::string sb((std::istreambuf_iterator<char>(fb)), {});
    CHECK(sa.size() > 100);
    CHECK(sa == sb);
    // PNG signature
    CHECK(static_cast<unsigned char>(sa[0]) == 0x89);
    CHECK(sa.substr(1, 3) == "PNG");
}

} // TEST_SUITE
