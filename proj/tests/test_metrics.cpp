#include <doctest/doctest.h>

#include <cmath>

#include "ctbench/metrics.hpp"
#include "helpers.hpp"

using namespace ctbench;
using testutil::const_image;
using testutil::noise_image;

TEST_SUITE("metrics") {

TEST_CASE("rmse oracles") {
    const Image a = noise_image(16, 16, 1.0, 0.0, 100.0, 1);
    CHECK(rmse(a, a) == 0.0);

    Image b = a;
    for (auto& v : b.data) v += 25.0f;
    CHECK(rmse(a, b) == doctest::Approx(25.0).epsilon(1e-6));

    Image u = make_image(2, 1, 1.0), w = make_image(2, 1, 1.0);
    u.data = {0.0f, 0.0f};
    w.data = {3.0f, 4.0f};
    CHECK(rmse(u, w) == doctest::Approx(std::sqrt(12.5)));
}

TEST_CASE("psnr oracles") {
    const Image a = const_image(8, 8, 1.0, 0.0f);
    CHECK(std::isinf(psnr(a, a)));
    CHECK(psnr(a, a) > 0.0);

    const Image b20 = const_image(8, 8, 1.0, 20.0f);
    const Image b10 = const_image(8, 8, 1.0, 10.0f);
    CHECK(psnr(a, b20) == doctest::Approx(40.0).epsilon(1e-9));
    CHECK(psnr(a, b10) - psnr(a, b20) == doctest::Approx(20.0 * std::log10(2.0)).epsilon(1e-9));
}

TEST_CASE("ssim basics") {
    const Image a = noise_image(64, 64, 1.0, 0.0, 200.0, 2);
    CHECK(ssim(a, a) == 1.0);

    // joint centering makes a shared offset a no-op; inputs quantized to
    // 1/32 so that the +512 shift is exact in float
    Image aq = a, b = noise_image(64, 64, 1.0, 0.0, 200.0, 3);
    for (auto& v : aq.data) v = std::round(v * 32.0f) / 32.0f;
    for (auto& v : b.data) v = std::round(v * 32.0f) / 32.0f;
    Image a2 = aq, b2 = b;
    for (auto& v : a2.data) v += 512.0f;
    for (auto& v : b2.data) v += 512.0f;
    CHECK(ssim(a2, b2) == doctest::Approx(ssim(aq, b)).epsilon(1e-9));

    // contrast inversion on structured content scores below 1
    Image inv = a;
    for (auto& v : inv.data) v = -v + 100.0f;
    CHECK(ssim(a, inv) < 1.0);

    // independent white noise decorrelates
    const Image n1 = noise_image(256, 256, 1.0, 0.0, 500.0, 4);
    const Image n2 = noise_image(256, 256, 1.0, 0.0, 500.0, 5);
    CHECK(std::abs(ssim(n1, n2)) < 0.05);
}

TEST_CASE("ssim closed form for constant images") {
    // variances vanish; with joint centering the means sit at -d/2 and d/2,
    // so ssim = (C1 - d^2/2) / (C1 + d^2/2) with C1 = (k1 * range)^2 = 400
    const Image a = const_image(32, 32, 1.0, 0.0f);
    const Image b = const_image(32, 32, 1.0, 20.0f);
    CHECK(ssim(a, b) == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
}

TEST_CASE("ms-ssim") {
    const Image a = noise_image(200, 200, 1.0, 0.0, 200.0, 6);
    const Image b = noise_image(200, 200, 1.0, 0.0, 200.0, 7);
    CHECK(ms_ssim(a, a) == 1.0);
    CHECK(ms_ssim(a, b) == doctest::Approx(ms_ssim(b, a)).epsilon(1e-12));

    // small inputs fall back to single-scale = ssim
    const Image s1 = noise_image(16, 16, 1.0, 0.0, 100.0, 8);
    const Image s2 = noise_image(16, 16, 1.0, 0.0, 100.0, 9);
    CHECK(ms_ssim(s1, s2) == doctest::Approx(ssim(s1, s2)).epsilon(1e-12));

    // constant offset, 5 scales: only the final luminance term differs from 1
    const Image ca = const_image(256, 256, 1.0, 0.0f);
    const Image cb = const_image(256, 256, 1.0, 20.0f);
    CHECK(ms_ssim(ca, cb) == doctest::Approx(std::pow(1.0 / 3.0, 0.1333)).epsilon(1e-6));
}

TEST_CASE("json rendering") {
    const Image a = const_image(16, 16, 1.0, 5.0f);
    const GlobalMetrics m = compute_global_metrics(a, a);
    CHECK(m.rmse == 0.0);
    CHECK(std::isinf(m.psnr));
    CHECK(m.ssim == 1.0);
    const std::string j = metrics_to_json(m);
    CHECK(j.find("\"inf\"") != std::string::npos);
    CHECK(j.find("rmse") != std::string::npos);

    GlobalMetrics f;
    f.rmse = 20.0;
    f.psnr = 40.0;
    f.ssim = 0.5;
    f.ms_ssim = 0.25;
    const std::string jf = metrics_to_json(f);
    CHECK(jf.find("inf") == std::string::npos);
}

} // TEST_SUITE
