// End-to-end acceptance checks. Each criterion prints exactly one PASS/FAIL
// line with its measured numbers and pinned tolerances; the exit status is
// nonzero if any criterion fails. Replay checks (C10) shell out to the CLI
// named by the CTBENCH_EXE environment variable.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ctbench/bench.hpp"
#include "ctbench/cnn3.hpp"
#include "ctbench/denoiser.hpp"
#include "ctbench/errors.hpp"
#include "ctbench/harness.hpp"
#include "ctbench/image.hpp"
#include "ctbench/io.hpp"
#include "ctbench/loss.hpp"
#include "ctbench/metrics.hpp"
#include "ctbench/parallel.hpp"
#include "ctbench/phantom.hpp"
#include "ctbench/preprocess.hpp"
#include "ctbench/scanner.hpp"

namespace fs = std::filesystem;
using namespace ctbench;

namespace {

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

fs::path fresh_dir(const std::string& tag) {
    const fs::path p = fs::temp_directory_path() / ("ctbench_accept_" + tag);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

// Simulations shared between C3(c) and C7: one suite config, one cache, and
// the FBP (identity-denoiser) baseline computed on first use.
struct SharedSuite {
    BenchSuiteConfig cfg;
    SimulationCache cache;
    std::optional<BenchReport> baseline;

    SharedSuite() {
        cfg.geom = ScanGeometry{360, 365, 0.5, 1e5, ReconKernel::sharp};
        cfg.width = 256;
        cfg.height = 256;
        cfg.pixel_spacing_mm = 0.5;
        cfg.body_radius_mm = 60.0;
        cfg.supersample = 8;
        cfg.dose = 0.25;
        cfg.n_contrast = 20;
        cfg.n_water = 20;
        cfg.nps_roi = 128;
        cfg.seed = 99;
    }

    const BenchReport& baseline_report() {
        if (!baseline) baseline = run_bench_suite(*make_identity_denoiser(), cfg, &cache);
        return *baseline;
    }
};

SharedSuite g_suite;

// ---- C1: FBP fidelity ----------------------------------------------------

bool c1(std::string& detail) {
    set_thread_count(1);
    const auto t0 = std::chrono::steady_clock::now();

    const ScanGeometry g{}; // 720 views, 729 detectors, 0.4 mm, sharp
    const int n = 512;
    const double sp = 0.5;
    const PhantomSpec water = make_water_cylinder(100.0);
    const PhantomSpec contrast = make_contrast_phantom(100.0);
    const Image water_rec =
        fbp(forward_project(hu_to_mu(rasterize(water, n, n, sp)), g), g, n, n, sp);
    const Image contrast_rec =
        fbp(forward_project(hu_to_mu(rasterize(contrast, n, n, sp)), g), g, n, n, sp);

    const double interior = roi_mean(water_rec, Roi{192, 192, 128, 128});
    double worst_bias = 0.0;
    for (std::size_t i = 0; i < contrast.inserts.size(); ++i) {
        const HuAccuracy acc = hu_accuracy(
            line_profile(contrast_rec, contrast, static_cast<int>(i), ProfileAxis::horizontal));
        worst_bias = std::max(worst_bias, std::fabs(acc.plateau_bias));
    }
    const double dt = seconds_since(t0);
    set_thread_count(0);

    detail = fmt("water interior %.2f HU (|x|<=15), worst insert plateau bias %.2f HU (<=20), "
                 "%.1f s (<30, 1 thread)",
                 interior, worst_bias, dt);
    return std::fabs(interior) <= 15.0 && worst_bias <= 20.0 && dt < 30.0;
}

// ---- C2: Gaussian MTF oracle ---------------------------------------------

PhantomSpec disk_900() {
    PhantomSpec spec;
    spec.background_hu = -1000.0;
    spec.body_radius_mm = 50.0;
    spec.body_hu = 0.0;
    spec.inserts.push_back({0.0, 0.0, 8.0, 900.0});
    return spec;
}

bool c2(std::string& detail) {
    const PhantomSpec spec = disk_900();
    const double sp = 0.5;
    const Image img = rasterize(spec, 256, 256, sp);
    const MtfCurve base = mtf_from_disk(img, spec.inserts[0], spec.body_hu);
    const double nyq = 1.0 / (2.0 * sp);

    bool pass = true;
    std::string parts;
    for (const double sigma_px : {0.5, 1.0}) {
        const Image blurred = gaussian_denoise(img, sigma_px);
        const MtfCurve meas = mtf_from_disk(blurred, spec.inserts[0], spec.body_hu);
        if (meas.freqs.size() != base.freqs.size())
            throw DataError("MTF frequency grids differ between baseline and blurred");
        const double sigma_mm = sigma_px * sp;
        const auto transfer = [&](double f) {
            return std::exp(-2.0 * M_PI * M_PI * sigma_mm * sigma_mm * f * f);
        };

        double max_err = 0.0;
        for (std::size_t i = 0; i < meas.freqs.size(); ++i) {
            const double f = meas.freqs[i];
            if (f > 0.8 * nyq + 1e-12) break;
            max_err = std::max(max_err, std::fabs(meas.values[i] - base.values[i] * transfer(f)));
        }

        // analytic 0.5 crossing of baseline x Gaussian transfer
        double crossing = base.freqs.back();
        for (std::size_t i = 1; i < base.freqs.size(); ++i) {
            const double p0 = base.values[i - 1] * transfer(base.freqs[i - 1]);
            const double p1 = base.values[i] * transfer(base.freqs[i]);
            if (p0 >= 0.5 && p1 < 0.5) {
                crossing = base.freqs[i - 1] +
                           (base.freqs[i] - base.freqs[i - 1]) * (p0 - 0.5) / (p0 - p1);
                break;
            }
        }
        const double rel50 = std::fabs(meas.mtf50 - crossing) / crossing;
        pass = pass && max_err <= 0.05 && rel50 <= 0.05;
        parts += fmt("%ssigma %.1f px: max dev %.3f (<=0.05), mtf50 %.3f vs analytic %.3f "
                     "(rel %.1f%%, <=5%%)",
                     parts.empty() ? "" : "; ", sigma_px, max_err, meas.mtf50, crossing,
                     100.0 * rel50);
    }
    detail = parts;
    return pass;
}

// ---- C3: NPS oracles -----------------------------------------------------

bool c3(std::string& detail) {
    // (a) + (b): flat spectrum of white noise, and Parseval.
    const double sigma = 10.0, sp = 0.5;
    std::mt19937_64 rng(404);
    std::normal_distribution<double> dist(0.0, sigma);
    std::vector<Image> imgs;
    const Roi roi{16, 16, 128, 128};
    double var_sum = 0.0;
    for (int k = 0; k < 50; ++k) {
        Image img = make_image(160, 160, sp);
        for (auto& v : img.data) v = static_cast<float>(dist(rng));
        var_sum += roi_variance(img, roi);
        imgs.push_back(std::move(img));
    }
    const double mean_var = var_sum / 50.0;

    const NpsResult nps = nps_estimate(imgs, roi);
    const double flat = sigma * sigma * sp * sp; // 25 HU^2 mm^2
    double worst_rel = 0.0;
    for (const double v : nps.radial_values)
        worst_rel = std::max(worst_rel, std::fabs(v - flat) / flat);
    const double integral = nps_integral(nps);
    const double parseval_rel = std::fabs(integral - mean_var) / mean_var;

    // (c) FBP quarter-dose water ensemble: rising "doughnut" radial profile.
    const BenchReport& fbp_base = g_suite.baseline_report();
    double first_nonzero = 0.0;
    for (const double v : fbp_base.nps_values)
        if (v > 0.0) {
            first_nonzero = v;
            break;
        }
    const double peak = *std::max_element(fbp_base.nps_values.begin(), fbp_base.nps_values.end());

    detail = fmt("white-noise bins within %.1f%% of %.1f (<=15%%), Parseval off by %.2f%% (<=5%%), "
                 "FBP peak/first-bin %.1fx (>2)",
                 100.0 * worst_rel, flat, 100.0 * parseval_rel,
                 first_nonzero > 0.0 ? peak / first_nonzero : 0.0);
    return worst_rel <= 0.15 && parseval_rel <= 0.05 && first_nonzero > 0.0 &&
           peak > 2.0 * first_nonzero;
}

// ---- C4: kernel ordering -------------------------------------------------

bool c4(std::string& detail) {
    const PhantomSpec spec = disk_900();
    const Image img = rasterize(spec, 256, 256, 0.5);
    ScanGeometry g{360, 365, 0.5, 1e5, ReconKernel::sharp};
    const Sinogram sino = forward_project(hu_to_mu(img), g);

    const Image sharp_rec = fbp(sino, g, 256, 256, 0.5);
    g.kernel = ReconKernel::smooth;
    const Image smooth_rec = fbp(sino, g, 256, 256, 0.5);

    const double m_sharp = mtf_from_disk(sharp_rec, spec.inserts[0], spec.body_hu).mtf50;
    const double m_smooth = mtf_from_disk(smooth_rec, spec.inserts[0], spec.body_hu).mtf50;
    detail = fmt("mtf50 sharp %.3f > smooth %.3f lp/mm", m_sharp, m_smooth);
    return m_sharp > m_smooth;
}

// ---- C5: gradient checks -------------------------------------------------

Cnn3ParamsT<double> random_double_params(std::uint64_t seed, double scale) {
    auto w = Cnn3ParamsT<double>::zeros();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist(0.0, scale);
    w.for_each([&](double& x) { x = dist(rng); });
    return w;
}

bool c5(std::string& detail) {
    const double h = 1e-6;
    const auto rel_err = [](double a, double fd) {
        const double scale = std::max(std::fabs(a), std::fabs(fd));
        if (scale < 1e-9) return 0.0; // both vanish
        return std::fabs(a - fd) / scale;
    };

    std::mt19937_64 rng(52);
    std::uniform_real_distribution<double> up(0.2, 0.8);
    std::normal_distribution<double> un(0.0, 0.05);
    Tensor<double> pred(2, 1, 8, 8), target(2, 1, 8, 8);
    for (auto& v : pred.data) v = up(rng);
    for (std::size_t i = 0; i < target.data.size(); ++i) target.data[i] = pred.data[i] + un(rng);
    const auto weights = random_double_params(9, 0.05);

    double worst_loss = 0.0;
    for (const LossKind kind : kAllLossKinds) {
        LossConfig cfg;
        cfg.kind = kind;
        cfg.lambda = 0.3;
        cfg.beta = 0.2;
        const LossEvalT<double> eval = loss_and_grad(cfg, pred, target, weights);
        for (int trial = 0; trial < 30; ++trial) {
            const std::size_t i = rng() % pred.data.size();
            Tensor<double> p = pred;
            p.data[i] += h;
            const double up_val = loss_and_grad(cfg, p, target, weights).value;
            p.data[i] -= 2.0 * h;
            const double dn_val = loss_and_grad(cfg, p, target, weights).value;
            worst_loss = std::max(worst_loss,
                                  rel_err(eval.grad_pred.data[i], (up_val - dn_val) / (2.0 * h)));
        }
        if (kind == LossKind::mse_wd) {
            // the one direct weight term: d/dw = beta * w
            auto flat = weights.flatten();
            const auto grad_flat = eval.grad_weights.flatten();
            for (int trial = 0; trial < 10; ++trial) {
                const std::size_t i = rng() % flat.size();
                auto fw = flat;
                fw[i] += h;
                const double u = loss_and_grad(cfg, pred, target,
                                               Cnn3ParamsT<double>::from_flat(fw)).value;
                fw[i] -= 2.0 * h;
                const double d = loss_and_grad(cfg, pred, target,
                                               Cnn3ParamsT<double>::from_flat(fw)).value;
                worst_loss = std::max(worst_loss, rel_err(grad_flat[i], (u - d) / (2.0 * h)));
            }
        }
    }

    // network weight gradients against the same finite-difference stencil
    const auto w = random_double_params(21, 0.08);
    Tensor<double> x(2, 1, 6, 6), t(2, 1, 6, 6);
    for (auto& v : x.data) v = up(rng);
    for (std::size_t i = 0; i < t.data.size(); ++i) t.data[i] = x.data[i] + un(rng);
    const auto sq_loss = [&](const Cnn3ParamsT<double>& params) {
        const Tensor<double> y = cnn3_forward_batch(params, x);
        double s = 0.0;
        for (std::size_t i = 0; i < y.data.size(); ++i)
            s += 0.5 * (y.data[i] - t.data[i]) * (y.data[i] - t.data[i]);
        return s;
    };
    Cnn3Trace<double> trace;
    const Tensor<double> y = cnn3_forward_batch(w, x, &trace);
    Tensor<double> grad_y = y;
    for (std::size_t i = 0; i < grad_y.data.size(); ++i) grad_y.data[i] = y.data[i] - t.data[i];
    auto grad_w = Cnn3ParamsT<double>::zeros();
    cnn3_backward_batch(w, x, trace, grad_y, grad_w);

    double worst_cnn = 0.0;
    const auto flat_w = w.flatten();
    const auto flat_g = grad_w.flatten();
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t i = rng() % flat_w.size();
        auto fw = flat_w;
        fw[i] += h;
        const double u = sq_loss(Cnn3ParamsT<double>::from_flat(fw));
        fw[i] -= 2.0 * h;
        const double d = sq_loss(Cnn3ParamsT<double>::from_flat(fw));
        worst_cnn = std::max(worst_cnn, rel_err(flat_g[i], (u - d) / (2.0 * h)));
    }

    detail = fmt("worst loss-grad rel err %.2e, worst cnn3 weight-grad rel err %.2e (both <1e-3)",
                 worst_loss, worst_cnn);
    return worst_loss < 1e-3 && worst_cnn < 1e-3;
}

// ---- C6: training efficacy -----------------------------------------------

PhantomSpec random_slice(std::mt19937_64& rng) {
    PhantomSpec spec;
    spec.background_hu = -1000.0;
    spec.body_hu = 0.0;
    spec.body_radius_mm = 21.0;
    std::uniform_real_distribution<double> upos(-12.0, 12.0), urad(2.5, 4.5);
    const double menu[] = {900.0, 340.0, 120.0, -35.0, -200.0, 500.0};
    const int want = 2 + static_cast<int>(rng() % 2);
    for (int guard = 0; static_cast<int>(spec.inserts.size()) < want && guard < 200; ++guard) {
        DiskInsert ins{upos(rng), upos(rng), urad(rng), menu[rng() % 6]};
        if (std::hypot(ins.cx_mm, ins.cy_mm) + ins.radius_mm > 0.9 * spec.body_radius_mm) continue;
        bool clear = true;
        for (const auto& other : spec.inserts)
            clear = clear && std::hypot(ins.cx_mm - other.cx_mm, ins.cy_mm - other.cy_mm) >
                                 ins.radius_mm + other.radius_mm + 1.0;
        if (clear) spec.inserts.push_back(ins);
    }
    validate_phantom(spec);
    return spec;
}

bool c6(std::string& detail) {
    const auto t0 = std::chrono::steady_clock::now();
    const ScanGeometry g{180, 97, 0.5, 2e4, ReconKernel::sharp};
    const int n = 96;
    const double sp = 0.5;

    std::mt19937_64 rng(1234);
    std::vector<std::pair<Image, Image>> train, held;
    for (int k = 0; k < 25; ++k) {
        const Image hu = rasterize(random_slice(rng), n, n, sp, 4);
        Image ld = simulate_scan(hu, g, 0.25, 9000 + 2 * k);
        Image nd = simulate_scan(hu, g, 1.0, 9001 + 2 * k);
        (k < 20 ? train : held).emplace_back(std::move(ld), std::move(nd));
    }

    TrainSetup setup; // patch 55, unity — the tuned configuration
    setup.loss.kind = LossKind::mse;
    setup.train.learning_rate = 1e-3;
    setup.train.minibatch = 128;
    setup.train.epochs = 260;
    setup.train.seed = 7;
    const Cnn3Model model = train_from_pairs(train, setup);
    const auto denoiser = make_cnn3_denoiser(model);

    double psnr_in = 0.0, psnr_out = 0.0;
    for (const auto& [ld, nd] : held) {
        psnr_in += psnr(ld, nd);
        psnr_out += psnr(denoiser->apply(ld, "h"), nd);
    }
    psnr_in /= held.size();
    psnr_out /= held.size();
    const double dt = seconds_since(t0);

    detail = fmt("held-out PSNR %.2f dB vs LDCT %.2f dB (gain %.2f, >=2), %.0f s (<600)", psnr_out,
                 psnr_in, psnr_out - psnr_in, dt);
    return psnr_out - psnr_in >= 2.0 && dt < 600.0;
}

// ---- C7: over-smoothing direction of effect ------------------------------

bool c7(std::string& detail) {
    const BenchReport& base = g_suite.baseline_report();
    const BenchReport gauss =
        run_bench_suite(*make_gaussian_denoiser(1.5), g_suite.cfg, &g_suite.cache);
    const BenchReport ident =
        run_bench_suite(*make_identity_denoiser(), g_suite.cfg, &g_suite.cache);

    double min_drop = 1e9;
    for (const auto& [hu, m50] : base.mtf50_by_contrast)
        min_drop = std::min(min_drop, m50 - gauss.mtf50_by_contrast.at(hu));

    double high_base = 0.0, high_gauss = 0.0;
    bool each_below = true;
    for (std::size_t i = 0; i < base.nps_freqs.size(); ++i) {
        if (base.nps_freqs[i] <= 0.4) continue;
        high_base += base.nps_values[i];
        high_gauss += gauss.nps_values[i];
        each_below = each_below && gauss.nps_values[i] < base.nps_values[i];
    }

    double ident_mtf_dev = 0.0;
    for (const auto& [hu, m50] : base.mtf50_by_contrast)
        ident_mtf_dev = std::max(ident_mtf_dev, std::fabs(ident.mtf50_by_contrast.at(hu) - m50));
    double ident_nps_rel = 0.0;
    for (std::size_t i = 0; i < base.nps_values.size(); ++i)
        if (base.nps_values[i] > 0.0)
            ident_nps_rel = std::max(ident_nps_rel, std::fabs(ident.nps_values[i] -
                                                              base.nps_values[i]) /
                                                        base.nps_values[i]);

    detail = fmt("blur mtf50 drop >= %.3f lp/mm (>0), NPS >0.4 lp/mm at %.1f%% of FBP "
                 "(suppressed, each bin below), identity dev mtf %.4f (<=0.01) nps %.2f%% (<=1%%)",
                 min_drop, high_base > 0.0 ? 100.0 * high_gauss / high_base : 0.0, ident_mtf_dev,
                 100.0 * ident_nps_rel);
    return min_drop > 0.0 && each_below && high_gauss < 0.5 * high_base &&
           ident_mtf_dev <= 0.01 && ident_nps_rel <= 0.01;
}

// ---- C8: normalization / HU interaction ----------------------------------

bool c8(std::string& detail) {
    const ScanGeometry g{180, 129, 0.5, 1e5, ReconKernel::sharp};
    const int n = 128;
    const double sp = 0.5;
    PhantomSpec spec = make_water_cylinder(28.0);
    spec.inserts.push_back({0.0, 0.0, 12.0, 0.0}); // profile target on the water plateau
    const Image hu = rasterize(spec, n, n, sp, 4);

    std::vector<std::pair<Image, Image>> pairs;
    for (int k = 0; k < 6; ++k)
        pairs.emplace_back(simulate_scan(hu, g, 0.25, 300 + 2 * k),
                           simulate_scan(hu, g, 1.0, 301 + 2 * k));
    const Image held = simulate_scan(hu, g, 0.25, 999);

    const auto plateau_bias = [&](Normalization norm) {
        TrainSetup setup;
        setup.pre.normalization = norm;
        setup.pre.patch_size = 32;
        setup.loss.kind = LossKind::mse;
        setup.train.learning_rate = 1e-3;
        setup.train.minibatch = 32;
        setup.train.epochs = 25;
        setup.train.seed = 5;
        const auto denoiser = make_cnn3_denoiser(train_from_pairs(pairs, setup));
        const Image out = denoiser->apply(held, "held");
        return hu_accuracy(line_profile(out, spec, 0, ProfileAxis::horizontal)).plateau_bias;
    };

    const double bias_unity = plateau_bias(Normalization::unity);
    const double bias_normf = plateau_bias(Normalization::normF);
    const double diff = std::fabs(bias_unity - bias_normf);
    detail = fmt("water plateau bias: unity %.2f HU, normF %.2f HU, |diff| %.2f (>1)", bias_unity,
                 bias_normf, diff);
    return diff > 1.0;
}

// ---- C9: greedy tuner ----------------------------------------------------

BenchReport hand_report(double mtf50, double mad) {
    BenchReport r;
    for (const double c : {900.0, 340.0}) r.mtf50_by_contrast[c] = mtf50;
    r.nps_freqs = {0.1, 0.2, 0.3};
    r.nps_values = {1.0, 2.0, 1.0};
    for (const double c : {900.0, 340.0}) r.hu_by_contrast[c] = HuAccuracy{0.0, mad, 0.0};
    return r;
}

bool c9(std::string& detail) {
    std::vector<ExperimentStage> stages(2);
    stages[0].name = "patch";
    for (const char* p : {"32", "55", "64"}) stages[0].candidates.push_back({p, {{"patch", p}}});
    stages[1].name = "lr";
    for (const char* r : {"1e-2", "1e-3"}) stages[1].candidates.push_back({r, {{"lr", r}}});

    int evals = 0;
    const auto objective = [&](const TrainSetup& s) {
        ++evals;
        CandidateScore score;
        score.psnr = 30.0;
        if (s.pre.patch_size == 55) score.psnr += 2.0;
        if (s.pre.patch_size == 64) score.psnr += 1.0;
        if (s.train.learning_rate == 1e-3) score.psnr += 4.0;
        return score;
    };
    const TuneResult r = greedy_tune(stages, TrainSetup{}, ObjectiveKind::global, objective);
    const bool winners_exact = r.winner.pre.patch_size == 55 && r.winner.train.learning_rate == 1e-3;
    const bool eval_count = evals == 5; // 3 + 2

    const BenchReport base = hand_report(0.8, 2.0);
    const double floor_composite = compose_bench_score(base, base, 29.9, 30.0).composite;
    const double above_composite = compose_bench_score(base, base, 30.1, 30.0).composite;

    detail = fmt("winners %s, %d evaluations (expect 5), composite below floor %.2f (=0) / "
                 "above floor %.2f (>0)",
                 winners_exact ? "exact" : "WRONG", evals, floor_composite, above_composite);
    return winners_exact && eval_count && floor_composite == 0.0 && above_composite > 0.0;
}

// ---- C10: manifest replay ------------------------------------------------

int run_cli(const std::string& exe, const std::vector<std::string>& args, const fs::path& log) {
    std::string cmd = "\"" + exe + "\"";
    for (const auto& a : args) cmd += " \"" + a + "\"";
    cmd += " >> \"" + log.string() + "\" 2>&1";
    const int status = std::system(cmd.c_str());
    if (status == -1) return -1;
    return WIFEXITED(status) ? WEXITSTATUS(status) : 128;
}

std::vector<std::string> manifest_argv(const fs::path& dir) {
    std::ifstream in(dir / "manifest.json");
    if (!in) throw DataError("missing manifest in " + dir.string());
    const auto j = nlohmann::json::parse(in);
    return j.at("argv").get<std::vector<std::string>>();
}

std::vector<std::string> with_out(std::vector<std::string> argv, const fs::path& out) {
    for (std::size_t i = 0; i + 1 < argv.size(); ++i)
        if (argv[i] == "--out") argv[i + 1] = out.string();
    return argv;
}

// Compares every regular file except the manifest byte for byte.
bool same_outputs(const fs::path& a, const fs::path& b, std::string& why) {
    const auto listing = [](const fs::path& root) {
        std::set<std::string> rel;
        for (const auto& e : fs::recursive_directory_iterator(root))
            if (e.is_regular_file() && e.path().filename() != "manifest.json" &&
                e.path().extension() != ".log")
                rel.insert(fs::relative(e.path(), root).string());
        return rel;
    };
    const auto la = listing(a), lb = listing(b);
    if (la != lb) {
        why = "file sets differ";
        return false;
    }
    for (const auto& r : la) {
        std::ifstream fa(a / r, std::ios::binary), fb(b / r, std::ios::binary);
        const std::vector<char> ba(std::istreambuf_iterator<char>(fa), {});
        const std::vector<char> bb(std::istreambuf_iterator<char>(fb), {});
        if (ba != bb) {
            why = r + " differs";
            return false;
        }
    }
    return true;
}

bool replay_matches(const std::string& exe, const std::vector<std::string>& args,
                    const fs::path& root, const std::string& tag, std::string& why) {
    const fs::path first = root / (tag + "_1"), second = root / (tag + "_2");
    auto argv = args;
    argv.push_back("--out");
    argv.push_back(first.string());
    if (run_cli(exe, argv, root / (tag + ".log")) != 0) {
        why = tag + ": first run failed";
        return false;
    }
    const auto replay = with_out(manifest_argv(first), second);
    if (run_cli(exe, replay, root / (tag + ".log")) != 0) {
        why = tag + ": replay failed";
        return false;
    }
    std::string inner;
    if (!same_outputs(first, second, inner)) {
        why = tag + ": " + inner;
        return false;
    }
    return true;
}

bool c10(std::string& detail) {
    const char* exe = std::getenv("CTBENCH_EXE");
    if (!exe || !fs::exists(exe)) {
        detail = "CTBENCH_EXE not set or missing; build the CLI and rerun";
        return false;
    }
    const fs::path root = fresh_dir("c10");

    // input pairs for train/tune, written once and referenced by manifest
    const ScanGeometry g{120, 97, 0.5, 1e5, ReconKernel::sharp};
    PhantomSpec spec = make_water_cylinder(14.0);
    const Image hu = rasterize(spec, 64, 64, 0.5, 4);
    nlohmann::json data{{"pairs", nlohmann::json::array()}, {"tuning", nlohmann::json::array()}};
    for (int k = 0; k < 3; ++k) {
        const std::string ld = fmt("ld%d.f32", k), nd = fmt("nd%d.f32", k);
        write_image(simulate_scan(hu, g, 0.25, 50 + 2 * k), root / ld);
        write_image(simulate_scan(hu, g, 1.0, 51 + 2 * k), root / nd);
        data[k < 2 ? "pairs" : "tuning"].push_back({{"ld", ld}, {"nd", nd}});
    }
    const fs::path pairs_json = root / "pairs.json";
    std::ofstream(pairs_json) << data.dump(2);

    std::vector<ExperimentStage> stages(2);
    stages[0].name = "patch";
    for (const char* p : {"16", "32"}) stages[0].candidates.push_back({p, {{"patch", p}}});
    stages[1].name = "lr";
    for (const char* r : {"1e-2", "1e-3"}) stages[1].candidates.push_back({r, {{"lr", r}}});
    write_stages(stages, root / "stages.json");

    std::string why;
    const bool scan_ok = replay_matches(
        exe,
        {"scan", "--phantom", "contrast", "--body-radius", "20", "--width", "96", "--height", "96",
         "--spacing", "0.5", "--views", "120", "--detectors", "97", "--tau", "0.5", "--dose",
         "0.25", "--seed", "11"},
        root, "scan", why);
    const bool ens_ok =
        scan_ok &&
        replay_matches(exe,
                       {"ensemble", "--phantom", "water", "--body-radius", "20", "--width", "96",
                        "--height", "96", "--spacing", "0.5", "--views", "120", "--detectors",
                        "97", "--tau", "0.5", "--dose", "0.25", "--n", "3", "--seed", "7"},
                       root, "ensemble", why);
    const bool train_ok =
        ens_ok && replay_matches(exe,
                                 {"train", "--data", pairs_json.string(), "--patch", "32",
                                  "--epochs", "2", "--minibatch", "16", "--lr", "1e-3", "--loss",
                                  "mse", "--seed", "3", "--deterministic"},
                                 root, "train", why);
    const bool tune_ok =
        train_ok &&
        replay_matches(exe,
                       {"tune", "--paradigm", "global", "--stages", (root / "stages.json").string(),
                        "--data", pairs_json.string(), "--tune-epochs", "1", "--final-epochs", "1",
                        "--minibatch", "16", "--seed", "3", "--deterministic"},
                       root, "tune", why);

    if (tune_ok)
        detail = "scan, ensemble, train, tune all replay bit-exactly from their manifests";
    else
        detail = why;
    return tune_ok;
}

} // namespace

int main(int argc, char** argv) {
    struct Criterion {
        const char* name;
        std::function<bool(std::string&)> fn;
    };
    const std::vector<Criterion> criteria{
        {"FBP fidelity", c1},        {"Gaussian MTF oracle", c2},
        {"NPS oracles", c3},         {"kernel ordering", c4},
        {"gradient checks", c5},     {"training efficacy", c6},
        {"over-smoothing bench", c7}, {"normalization interaction", c8},
        {"greedy tuner", c9},        {"manifest replay", c10},
    };

    // Optional criterion numbers on the command line restrict the run.
    std::set<std::size_t> only;
    for (int a = 1; a < argc; ++a) only.insert(std::strtoul(argv[a], nullptr, 10));

    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        if (!only.empty() && !only.count(i + 1)) continue;
        std::string detail;
        bool pass = false;
        try {
            pass = criteria[i].fn(detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        if (!pass) ++failures;
        std::printf("C%zu %s - %s: %s\n", i + 1, pass ? "PASS" : "FAIL", criteria[i].name,
                    detail.c_str());
        std::fflush(stdout);
    }
    if (failures) std::printf("%d of %zu criteria failed\n", failures, criteria.size());
    return failures ? 1 : 0;
}
