// ctbench: single entry point for data generation, training, denoising,
// bench tests, metrics, tuning and reports. Every run directory receives a
// manifest.json whose "argv" replays the run bit-exactly (deterministic mode).
#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <CLI/CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ctbench/bench.hpp"
#include "ctbench/denoiser.hpp"
#include "ctbench/errors.hpp"
#include "ctbench/harness.hpp"
#include "ctbench/io.hpp"
#include "ctbench/metrics.hpp"
#include "ctbench/parallel.hpp"
#include "ctbench/phantom.hpp"
#include "ctbench/plot.hpp"
#include "ctbench/preprocess.hpp"
#include "ctbench/scanner.hpp"
#include "ctbench/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
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

// ---- run manifest ----------------------------------------------------------

/// Collects the resolved configuration of one invocation and writes
/// <out>/manifest.json last, with the output list taken from the directory
/// itself so the manifest never goes stale.
class Run {
public:
    Run(std::string command, std::vector<std::string> argv, fs::path out)
        : command_(std::move(command)), argv_(std::move(argv)), out_(std::move(out)),
          t0_(std::chrono::steady_clock::now()) {
        fs::create_directories(out_);
    }

    const fs::path& dir() const { return out_; }
    json& config() { return config_; }
    void add_input(const std::string& name) { inputs_.push_back(name); }

    void finish() {
        std::vector<std::string> outputs;
        for (const auto& e : fs::recursive_directory_iterator(out_))
            if (e.is_regular_file() && e.path().filename() != "manifest.json")
                outputs.push_back(fs::relative(e.path(), out_).generic_string());
        std::sort(outputs.begin(), outputs.end());
        const double dt =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
        const json m{{"command", command_}, {"argv", argv_},     {"version", kVersion},
                     {"config", config_},  {"inputs", inputs_},  {"outputs", outputs},
                     {"duration_s", dt}};
        std::ofstream outf(out_ / "manifest.json", std::ios::trunc);
        if (!outf) throw DataError("cannot write " + (out_ / "manifest.json").string());
        outf << m.dump(2) << "\n";
    }

private:
    std::string command_;
    std::vector<std::string> argv_;
    fs::path out_;
    json config_;
    std::vector<std::string> inputs_;
    std::chrono::steady_clock::time_point t0_;
};

// ---- shared flag groups ----------------------------------------------------

struct GeomFlags {
    int views = 720;
    int detectors = 729;
    double tau = 0.4;
    double i0 = 1e5;
    std::string kernel = "sharp";
};

void add_geom_flags(CLI::App* c, GeomFlags& g) {
    c->add_option("--views", g.views, "projection views over 180 degrees");
    c->add_option("--detectors", g.detectors, "detector channels");
    c->add_option("--tau", g.tau, "detector spacing, mm");
    c->add_option("--i0", g.i0, "unattenuated photons per ray");
    c->add_option("--kernel", g.kernel, "reconstruction kernel")
        ->check(CLI::IsMember({"sharp", "smooth"}));
}

ScanGeometry to_geometry(const GeomFlags& f) {
    ScanGeometry g;
    g.n_views = f.views;
    g.n_detectors = f.detectors;
    g.detector_spacing_mm = f.tau;
    g.i0 = f.i0;
    g.kernel = f.kernel == "smooth" ? ReconKernel::smooth : ReconKernel::sharp;
    validate_geometry(g);
    return g;
}

json geometry_json(const ScanGeometry& g) {
    return json{{"views", g.n_views},
                {"detectors", g.n_detectors},
                {"tau_mm", g.detector_spacing_mm},
                {"i0", g.i0},
                {"kernel", g.kernel == ReconKernel::smooth ? "smooth" : "sharp"}};
}

struct GridFlags {
    int width = 512;
    int height = 512;
    double spacing = 0.5;
    int supersample = 8;
};

void add_grid_flags(CLI::App* c, GridFlags& g) {
    c->add_option("--width", g.width, "image width, px");
    c->add_option("--height", g.height, "image height, px");
    c->add_option("--spacing", g.spacing, "pixel spacing, mm");
    c->add_option("--supersample", g.supersample, "rasterization supersampling factor");
}

struct PhantomFlags {
    std::string phantom = "water";
    double body_radius = 100.0;
};

void add_phantom_flags(CLI::App* c, PhantomFlags& p) {
    c->add_option("--phantom", p.phantom, "water | contrast | path to a phantom JSON");
    c->add_option("--body-radius", p.body_radius, "body radius for the builtin phantoms, mm");
}

PhantomSpec resolve_phantom(const PhantomFlags& f) {
    if (f.phantom == "water") return make_water_cylinder(f.body_radius);
    if (f.phantom == "contrast") return make_contrast_phantom(f.body_radius);
    return read_phantom(f.phantom);
}

// ---- small helpers ---------------------------------------------------------

std::unique_ptr<Denoiser> parse_denoiser(const std::string& s) {
    const auto colon = s.find(':');
    const std::string kind = s.substr(0, colon);
    const std::string arg = colon == std::string::npos ? "" : s.substr(colon + 1);
    try {
        if (kind == "identity") return make_identity_denoiser();
        if (kind == "gaussian") return make_gaussian_denoiser(std::stod(arg));
        if (kind == "tv") {
            const auto sep = arg.find(':');
            const double lambda = std::stod(arg.substr(0, sep));
            const int iters = sep == std::string::npos ? 100 : std::stoi(arg.substr(sep + 1));
            return make_tv_denoiser(lambda, iters);
        }
        if (kind == "cnn3") return make_cnn3_denoiser(read_cnn3_model(arg));
        if (kind == "external") return make_external_denoiser(arg);
    } catch (const std::invalid_argument&) {
        throw DataError("bad denoiser argument in '" + s + "'");
    }
    throw DataError("unknown denoiser '" + s +
                    "' (want identity, gaussian:SIGMA, tv:LAMBDA[:ITERS], cnn3:WEIGHTS, "
                    "external:DIR)");
}

/// Reads a training-data manifest: {"pairs": [{"ld","nd"}...], "tuning": [...]},
/// paths relative to the manifest's directory.
TuningData read_pairs(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw DataError(path.string() + ": " + e.what());
    }
    const fs::path base = path.parent_path();
    TuningData data;
    try {
        for (const auto& e : j.at("pairs"))
            data.train_pairs.emplace_back(read_image(base / e.at("ld").get<std::string>()),
                                          read_image(base / e.at("nd").get<std::string>()));
        if (j.contains("tuning"))
            for (const auto& e : j.at("tuning"))
                data.tuning_set.emplace_back(read_image(base / e.at("ld").get<std::string>()),
                                             read_image(base / e.at("nd").get<std::string>()));
    } catch (const json::exception& e) {
        throw DataError(path.string() + ": " + e.what());
    }
    if (data.train_pairs.empty()) throw DataError(path.string() + ": \"pairs\" is empty");
    return data;
}

void apply_threads(bool deterministic, int threads) {
    if (deterministic)
        set_thread_count(1);
    else if (threads > 0)
        set_thread_count(threads);
}

void require_seed(const CLI::App* c) {
    if (!c->count("--seed"))
        throw CLI::RequiredError(std::string(c->get_name()) + " requires an explicit --seed");
}

json setup_json(const TrainSetup& setup) { return json::parse(train_setup_to_json(setup)); }

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out << text;
}

// ---- phantom ---------------------------------------------------------------

void setup_phantom(CLI::App& app, const std::vector<std::string>& raw) {
    auto* c = app.add_subcommand("phantom", "write a builtin phantom spec as JSON");
    auto kind = std::make_shared<std::string>();
    auto radius = std::make_shared<double>(100.0);
    auto out = std::make_shared<std::string>();
    c->add_option("kind", *kind, "water | contrast")
        ->required()
        ->check(CLI::IsMember({"water", "contrast"}));
    c->add_option("--body-radius", *radius, "body radius, mm");
    c->add_option("--out", *out, "output file")->required();
    c->callback([kind, radius, out, &raw] {
        (void)raw;
        const PhantomSpec spec =
            *kind == "water" ? make_water_cylinder(*radius) : make_contrast_phantom(*radius);
        if (const fs::path parent = fs::path(*out).parent_path(); !parent.empty())
            fs::create_directories(parent);
        write_phantom(spec, *out);
        std::printf("wrote %s\n", out->c_str());
    });
}

// ---- scan / ensemble -------------------------------------------------------

struct ScanState {
    GeomFlags geom;
    GridFlags grid;
    PhantomFlags phantom;
    double dose = 1.0;
    std::uint64_t seed = 0;
    bool noiseless = false;
    bool deterministic = false;
    int threads = 0;
    int n = 1;
    std::string out;
};

void run_scan(const ScanState& st, const CLI::App* c, const std::vector<std::string>& raw,
              bool ensemble) {
    if (!st.noiseless) require_seed(c);
    apply_threads(st.deterministic, st.threads);
    Run run(ensemble ? "ensemble" : "scan", raw, st.out);

    const PhantomSpec spec = resolve_phantom(st.phantom);
    const ScanGeometry g = to_geometry(st.geom);
    const Image truth =
        rasterize(spec, st.grid.width, st.grid.height, st.grid.spacing, st.grid.supersample);
    write_phantom(spec, run.dir() / "phantom.json");
    write_image(truth, run.dir() / "truth.f32");

    const auto reconstruct = [&](std::uint64_t seed) {
        if (st.noiseless) return fbp(forward_project(hu_to_mu(truth), g), g, truth.width,
                                     truth.height, truth.pixel_spacing_mm);
        return simulate_scan(truth, g, st.dose, seed);
    };
    if (ensemble) {
        for (int k = 0; k < st.n; ++k)
            write_image(reconstruct(st.seed + k), run.dir() / fmt("recon_%03d.f32", k));
    } else {
        write_image(reconstruct(st.seed), run.dir() / "recon.f32");
    }

    run.config() = json{{"phantom", json::parse(phantom_to_json(spec))},
                        {"geometry", geometry_json(g)},
                        {"grid",
                         {{"width", st.grid.width},
                          {"height", st.grid.height},
                          {"spacing_mm", st.grid.spacing},
                          {"supersample", st.grid.supersample}}},
                        {"dose", st.dose},
                        {"noiseless", st.noiseless},
                        {"seed", st.seed},
                        {"deterministic", st.deterministic}};
    if (ensemble) run.config()["n"] = st.n;
    run.finish();
    std::printf("wrote %s\n", st.out.c_str());
}

void setup_scan(CLI::App& app, const std::vector<std::string>& raw, bool ensemble) {
    auto* c = ensemble
                  ? app.add_subcommand("ensemble", "simulate n noisy realizations of one phantom")
                  : app.add_subcommand("scan", "simulate one dose-reduced scan of a phantom");
    auto st = std::make_shared<ScanState>();
    add_phantom_flags(c, st->phantom);
    add_grid_flags(c, st->grid);
    add_geom_flags(c, st->geom);
    c->add_option("--dose", st->dose, "dose fraction in (0, 1]");
    c->add_option("--seed", st->seed, "noise seed (realization k uses seed + k)");
    if (ensemble)
        c->add_option("--n", st->n, "number of realizations")->required();
    else
        c->add_flag("--noiseless", st->noiseless, "skip the noise model");
    c->add_flag("--deterministic", st->deterministic, "single-threaded, order-fixed run");
    c->add_option("--threads", st->threads, "worker cap (0 = all cores)");
    c->add_option("--out", st->out, "run directory")->required();
    c->callback([st, c, &raw, ensemble] { run_scan(*st, c, raw, ensemble); });
}

// ---- train -----------------------------------------------------------------

struct TrainState {
    std::string data;
    TrainSetup setup;
    std::string norm = "unity";
    std::string loss = "mse";
    std::string optimizer = "adam";
    bool deterministic = false;
    int threads = 0;
    std::string out;
};

void run_train(TrainState& st, const CLI::App* c, const std::vector<std::string>& raw) {
    require_seed(c);
    apply_threads(st.deterministic, st.threads);
    st.setup.pre.normalization = normalization_from_string(st.norm);
    st.setup.loss.kind = loss_kind_from_string(st.loss);
    st.setup.train.optimizer = optimizer_from_string(st.optimizer);
    validate_preprocess(st.setup.pre);
    validate_loss(st.setup.loss);
    validate_train(st.setup.train);

    Run run("train", raw, st.out);
    run.add_input(st.data);
    const TuningData data = read_pairs(st.data);

    std::string log = "epoch,loss\n";
    const Cnn3Model model = train_from_pairs(
        data.train_pairs, st.setup,
        [&](int epoch, double loss) { log += fmt("%d,%.17g\n", epoch, loss); });
    write_cnn3_model(model, run.dir() / "model");
    write_text(run.dir() / "train_log.csv", log);

    json summary{{"n_train_pairs", data.train_pairs.size()},
                 {"n_tuning_pairs", data.tuning_set.size()}};
    if (!data.tuning_set.empty()) {
        const auto den = make_cnn3_denoiser(model);
        double p_in = 0, p_out = 0, s_in = 0, s_out = 0;
        for (const auto& [ld, nd] : data.tuning_set) {
            const Image out = den->apply(ld, "tuning");
            p_in += psnr(ld, nd);
            p_out += psnr(out, nd);
            s_in += ssim(ld, nd);
            s_out += ssim(out, nd);
        }
        const double n = static_cast<double>(data.tuning_set.size());
        summary["tuning"] = json{{"psnr_in", p_in / n},
                                 {"psnr_out", p_out / n},
                                 {"ssim_in", s_in / n},
                                 {"ssim_out", s_out / n}};
    }
    write_text(run.dir() / "summary.json", summary.dump(2) + "\n");

    run.config() = json{{"data", st.data},
                        {"setup", setup_json(st.setup)},
                        {"deterministic", st.deterministic}};
    run.finish();
    std::printf("wrote %s\n", st.out.c_str());
}

void add_train_setup_flags(CLI::App* c, TrainState& st) {
    c->add_option("--patch", st.setup.pre.patch_size, "training patch side, px");
    c->add_option("--stride", st.setup.pre.patch_stride, "patch grid stride (0 = patch size)");
    c->add_option("--norm", st.norm, "model-domain normalization")
        ->check(CLI::IsMember({"unity", "normF"}));
    c->add_option("--loss", st.loss, "training loss")
        ->check(CLI::IsMember({"mse", "msel1", "mae", "msetv", "msewd", "msssiml1"}));
    c->add_option("--lambda", st.setup.loss.lambda, "prior weight (msel1 / msetv)");
    c->add_option("--beta", st.setup.loss.beta, "weight-decay coefficient (msewd)");
    c->add_option("--alpha", st.setup.loss.alpha, "MS-SSIM mix weight (msssiml1)");
    c->add_option("--lr", st.setup.train.learning_rate, "learning rate");
    c->add_option("--minibatch", st.setup.train.minibatch, "minibatch size");
    c->add_option("--optimizer", st.optimizer)->check(CLI::IsMember({"adam", "sgd"}));
    c->add_flag("--aug-scale", st.setup.pre.augment.scale, "add 0.6x/0.8x downscaled patches");
    c->add_flag("--aug-rotate-flip", st.setup.pre.augment.rotate_flip,
                "add one rotated+flipped copy per pair");
    c->add_flag("--aug-dose-blend", st.setup.pre.augment.dose_blend,
                "add randomly dose-blended copies");
}

void setup_train(CLI::App& app, const std::vector<std::string>& raw) {
    auto* c = app.add_subcommand("train", "train the CNN denoiser on LD/ND pairs");
    auto st = std::make_shared<TrainState>();
    c->add_option("--data", st->data, "pairs manifest JSON")->required();
    add_train_setup_flags(c, *st);
    c->add_option("--epochs", st->setup.train.epochs, "training epochs");
    c->add_option("--seed", st->setup.train.seed, "init/shuffle seed");
    c->add_flag("--deterministic", st->deterministic, "single-threaded, order-fixed run");
    c->add_option("--threads", st->threads, "worker cap (0 = all cores)");
    c->add_option("--out", st->out, "run directory")->required();
    c->callback([st, c, &raw] { run_train(*st, c, raw); });
}

// ---- denoise ---------------------------------------------------------------

void setup_denoise(CLI::App& app, const std::vector<std::string>& raw) {
    auto* c = app.add_subcommand("denoise", "apply a denoiser to images");
    auto den = std::make_shared<std::string>();
    auto inputs = std::make_shared<std::vector<std::string>>();
    auto threads = std::make_shared<int>(0);
    auto out = std::make_shared<std::string>();
    c->add_option("--denoiser", *den,
                  "identity | gaussian:SIGMA | tv:LAMBDA[:ITERS] | cnn3:WEIGHTS | external:DIR")
        ->required();
    c->add_option("--in", *inputs, "input image(s)")->required()->expected(-1);
    c->add_option("--threads", *threads, "worker cap (0 = all cores)");
    c->add_option("--out", *out, "run directory")->required();
    c->callback([den, inputs, threads, out, &raw] {
        apply_threads(false, *threads);
        Run run("denoise", raw, *out);
        const auto d = parse_denoiser(*den);
        std::set<std::string> seen;
        for (const auto& path : *inputs) {
            run.add_input(path);
            const std::string stem = payload_path(path).stem().string();
            if (!seen.insert(stem).second)
                throw DataError("duplicate input basename '" + stem + "'");
            write_image(d->apply(read_image(path), stem), run.dir() / (stem + "_dn.f32"));
        }
        run.config() = json{{"denoiser", *den}, {"n_inputs", inputs->size()}};
        run.finish();
        std::printf("wrote %s\n", out->c_str());
    });
}

// ---- metrics ---------------------------------------------------------------

void setup_metrics(CLI::App& app, const std::vector<std::string>& raw) {
    auto* c = app.add_subcommand("metrics", "RMSE / PSNR / SSIM / MS-SSIM of a vs b");
    auto a = std::make_shared<std::string>();
    auto b = std::make_shared<std::string>();
    auto range = std::make_shared<double>(kDefaultDataRange);
    auto out = std::make_shared<std::string>();
    c->add_option("--a", *a, "test image")->required();
    c->add_option("--b", *b, "reference image")->required();
    c->add_option("--range", *range, "data range for PSNR/SSIM");
    c->add_option("--out", *out, "optional run directory");
    c->callback([a, b, range, out, &raw] {
        const GlobalMetrics m = compute_global_metrics(read_image(*a), read_image(*b), *range);
        const std::string text = metrics_to_json(m);
        std::printf("%s\n", text.c_str());
        if (!out->empty()) {
            Run run("metrics", raw, *out);
            run.add_input(*a);
            run.add_input(*b);
            write_text(run.dir() / "metrics.json", text + "\n");
            run.config() = json{{"a", *a}, {"b", *b}, {"range", *range}};
            run.finish();
        }
    });
}

// ---- bench mtf / nps / hu / diff / suite -----------------------------------

struct MtfState {
    std::string in;
    PhantomFlags phantom;
    int insert = -1;
    std::string out;
};

void setup_bench_mtf(CLI::App& bench, const std::vector<std::string>& raw) {
    auto* c = bench.add_subcommand("mtf", "contrast-dependent MTF from disk-insert edges");
    auto st = std::make_shared<MtfState>();
    c->add_option("--in", st->in, "reconstructed image")->required();
    add_phantom_flags(c, st->phantom);
    c->add_option("--insert", st->insert, "insert index (-1 = all)");
    c->add_option("--out", st->out, "run directory")->required();
    c->callback([st, &raw] {
        Run run("bench mtf", raw, st->out);
        run.add_input(st->in);
        const Image img = read_image(st->in);
        const PhantomSpec spec = resolve_phantom(st->phantom);
        if (spec.inserts.empty()) throw DataError("phantom has no inserts to measure");
        if (st->insert >= static_cast<int>(spec.inserts.size()))
            throw DataError(fmt("insert %d out of range (phantom has %zu)", st->insert,
                                spec.inserts.size()));
        std::map<double, double> mtf50;
        for (int i = 0; i < static_cast<int>(spec.inserts.size()); ++i) {
            if (st->insert >= 0 && i != st->insert) continue;
            const MtfCurve curve = mtf_from_disk(img, spec.inserts[i], spec.body_hu);
            write_mtf_csv(curve, run.dir() / fmt("mtf_%g.csv", spec.inserts[i].hu));
            mtf50[spec.inserts[i].hu] = curve.mtf50;
        }
        write_mtf_summary(mtf50, run.dir() / "mtf50.json");
        run.config() = json{{"phantom", json::parse(phantom_to_json(spec))},
                            {"insert", st->insert}};
        run.finish();
        std::printf("wrote %s\n", st->out.c_str());
    });
}

struct NpsState {
    std::vector<std::string> inputs;
    std::string dir;
    std::vector<int> roi;
    std::string out;
};

void setup_bench_nps(CLI::App& bench, const std::vector<std::string>& raw) {
    auto* c = bench.add_subcommand("nps", "noise power spectrum of an image ensemble");
    auto st = std::make_shared<NpsState>();
    c->add_option("--in", st->inputs, "realization image(s)")->expected(-1);
    c->add_option("--dir", st->dir, "directory of realization .f32 images");
    c->add_option("--roi", st->roi, "ROI as X Y W H (default: centered 128 square)")
        ->expected(4);
    c->add_option("--out", st->out, "run directory")->required();
    c->callback([st, &raw] {
        Run run("bench nps", raw, st->out);
        std::vector<std::string> paths = st->inputs;
        if (!st->dir.empty()) {
            for (const auto& e : fs::directory_iterator(st->dir))
                if (e.path().extension() == ".f32") paths.push_back(e.path().string());
            std::sort(paths.begin(), paths.end());
        }
        if (paths.size() < 2) throw DataError("need at least 2 realizations (--in / --dir)");
        std::vector<Image> realizations;
        for (const auto& p : paths) {
            run.add_input(p);
            realizations.push_back(read_image(p));
        }
        Roi roi;
        if (!st->roi.empty()) {
            roi = Roi{st->roi[0], st->roi[1], st->roi[2], st->roi[3]};
        } else {
            const int side = std::min({128, realizations[0].width, realizations[0].height});
            roi = Roi{(realizations[0].width - side) / 2, (realizations[0].height - side) / 2,
                      side, side};
        }
        const NpsResult nps = nps_estimate(realizations, roi);
        write_nps_csv(nps, run.dir() / "nps.csv");
        write_nps_2d(nps, run.dir() / "nps2d.f32");
        write_nps_png(nps, run.dir() / "nps2d.png");
        run.config() = json{{"n_realizations", paths.size()},
                            {"roi", {roi.x0, roi.y0, roi.w, roi.h}}};
        run.finish();
        std::printf("wrote %s\n", st->out.c_str());
    });
}

struct HuState {
    std::string in;
    PhantomFlags phantom;
    int insert = 0;
    std::string axis = "horizontal";
    std::string out;
};

void setup_bench_hu(CLI::App& bench, const std::vector<std::string>& raw) {
    auto* c = bench.add_subcommand("hu", "HU line profile and plateau accuracy of an insert");
    auto st = std::make_shared<HuState>();
    c->add_option("--in", st->in, "reconstructed image")->required();
    add_phantom_flags(c, st->phantom);
    c->add_option("--insert", st->insert, "insert index");
    c->add_option("--axis", st->axis)->check(CLI::IsMember({"horizontal", "vertical"}));
    c->add_option("--out", st->out, "run directory")->required();
    c->callback([st, &raw] {
        Run run("bench hu", raw, st->out);
        run.add_input(st->in);
        const Image img = read_image(st->in);
        const PhantomSpec spec = resolve_phantom(st->phantom);
        const ProfileAxis axis =
            st->axis == "vertical" ? ProfileAxis::vertical : ProfileAxis::horizontal;
        const LineProfile profile = line_profile(img, spec, st->insert, axis);
        write_profile_csv(profile, run.dir() / "profile.csv");
        const HuAccuracy acc = hu_accuracy(profile);
        const json j{{"insert_hu", spec.inserts.at(st->insert).hu},
                     {"plateau_bias", acc.plateau_bias},
                     {"plateau_mad", acc.plateau_mad},
                     {"edge_overshoot", acc.edge_overshoot}};
        write_text(run.dir() / "hu.json", j.dump(2) + "\n");
        run.config() = json{{"phantom", json::parse(phantom_to_json(spec))},
                            {"insert", st->insert},
                            {"axis", st->axis}};
        run.finish();
        std::printf("wrote %s\n", st->out.c_str());
    });
}

struct DiffState {
    std::string a, b;
    double window_width = 122.0;
    double window_level = 61.0;
    std::string out;
};

void run_diff(const DiffState& st, const std::vector<std::string>& raw, const char* command) {
    Run run(command, raw, st.out);
    run.add_input(st.a);
    run.add_input(st.b);
    const Image diff = abs_diff(read_image(st.a), read_image(st.b));
    write_image(diff, run.dir() / "diff.f32");
    write_windowed_png(diff, DisplayWindow{st.window_width, st.window_level},
                       run.dir() / "diff.png");
    run.config() = json{{"a", st.a},
                        {"b", st.b},
                        {"window", {{"width_hu", st.window_width}, {"level_hu", st.window_level}}}};
    run.finish();
    std::printf("wrote %s\n", st.out.c_str());
}

void setup_diff(CLI::App& parent, const std::vector<std::string>& raw, const char* command) {
    auto* c = parent.add_subcommand("diff", "absolute difference image, windowed render");
    auto st = std::make_shared<DiffState>();
    c->add_option("--a", st->a)->required();
    c->add_option("--b", st->b)->required();
    c->add_option("--window-width", st->window_width, "display window width, HU");
    c->add_option("--window-level", st->window_level, "display window level, HU");
    c->add_option("--out", st->out, "run directory")->required();
    c->callback([st, &raw, command] { run_diff(*st, raw, command); });
}

struct SuiteFlags {
    GeomFlags geom{360, 365, 0.5, 1e5, "sharp"};
    int size = 256;
    double spacing = 0.5;
    double body_radius = 60.0;
    int supersample = 4;
    double dose = 0.25;
    int n_contrast = 8;
    int n_water = 8;
    int nps_roi = 128;
    std::uint64_t seed = 0;
};

void add_suite_flags(CLI::App* c, SuiteFlags& f, const char* prefix) {
    const auto opt = [&](const char* name) { return std::string("--") + prefix + name; };
    c->add_option(opt("views"), f.geom.views);
    c->add_option(opt("detectors"), f.geom.detectors);
    c->add_option(opt("tau"), f.geom.tau, "detector spacing, mm");
    c->add_option(opt("i0"), f.geom.i0);
    c->add_option(opt("kernel"), f.geom.kernel)->check(CLI::IsMember({"sharp", "smooth"}));
    c->add_option(opt("size"), f.size, "square image side, px");
    c->add_option(opt("spacing"), f.spacing, "pixel spacing, mm");
    c->add_option(opt("body-radius"), f.body_radius, "phantom body radius, mm");
    c->add_option(opt("supersample"), f.supersample);
    c->add_option(opt("dose"), f.dose, "low-dose fraction");
    c->add_option(opt("n-contrast"), f.n_contrast, "contrast-phantom realizations");
    c->add_option(opt("n-water"), f.n_water, "water-ensemble realizations");
    c->add_option(opt("nps-roi"), f.nps_roi, "NPS ROI side, px");
}

BenchSuiteConfig to_suite_config(const SuiteFlags& f) {
    BenchSuiteConfig cfg;
    cfg.geom = to_geometry(f.geom);
    cfg.width = cfg.height = f.size;
    cfg.pixel_spacing_mm = f.spacing;
    cfg.body_radius_mm = f.body_radius;
    cfg.supersample = f.supersample;
    cfg.dose = f.dose;
    cfg.n_contrast = f.n_contrast;
    cfg.n_water = f.n_water;
    cfg.nps_roi = f.nps_roi;
    cfg.seed = f.seed;
    return cfg;
}

json suite_json(const BenchSuiteConfig& cfg) {
    return json{{"geometry", geometry_json(cfg.geom)},
                {"width", cfg.width},
                {"height", cfg.height},
                {"spacing_mm", cfg.pixel_spacing_mm},
                {"body_radius_mm", cfg.body_radius_mm},
                {"supersample", cfg.supersample},
                {"dose", cfg.dose},
                {"n_contrast", cfg.n_contrast},
                {"n_water", cfg.n_water},
                {"nps_roi", cfg.nps_roi},
                {"seed", cfg.seed}};
}

void write_report_nps_csv(const BenchReport& report, const fs::path& path) {
    std::string text = "freq_lp_per_mm,nps_hu2_mm2\n";
    for (std::size_t i = 0; i < report.nps_freqs.size(); ++i)
        text += fmt("%.17g,%.17g\n", report.nps_freqs[i], report.nps_values[i]);
    write_text(path, text);
}

void setup_bench_suite(CLI::App& bench, const std::vector<std::string>& raw) {
    auto* c = bench.add_subcommand(
        "suite", "full bench report (MTF + NPS + HU accuracy) for one denoiser");
    auto st = std::make_shared<SuiteFlags>();
    auto den = std::make_shared<std::string>("identity");
    auto threads = std::make_shared<int>(0);
    auto out = std::make_shared<std::string>();
    c->add_option("--denoiser", *den,
                  "identity | gaussian:SIGMA | tv:LAMBDA[:ITERS] | cnn3:WEIGHTS | external:DIR");
    add_suite_flags(c, *st, "");
    c->add_option("--seed", st->seed, "simulation seed");
    c->add_option("--threads", *threads, "worker cap (0 = all cores)");
    c->add_option("--out", *out, "run directory")->required();
    c->callback([st, den, threads, out, c, &raw] {
        require_seed(c);
        apply_threads(false, *threads);
        Run run("bench suite", raw, *out);
        const BenchSuiteConfig cfg = to_suite_config(*st);
        SimulationCache cache(env_cache_dir());
        const auto d = parse_denoiser(*den);
        const BenchReport report = run_bench_suite(*d, cfg, &cache);
        write_bench_report(report, run.dir() / "report.json");
        write_report_nps_csv(report, run.dir() / "nps.csv");
        write_mtf_summary(report.mtf50_by_contrast, run.dir() / "mtf50.json");
        run.config() = json{{"denoiser", *den}, {"suite", suite_json(cfg)}};
        run.finish();
        std::printf("wrote %s\n", out->c_str());
    });
}

void setup_bench(CLI::App& app, const std::vector<std::string>& raw) {
    auto* bench = app.add_subcommand("bench", "CT bench tests: mtf, nps, hu, diff, suite");
    bench->require_subcommand(1);
    setup_bench_mtf(*bench, raw);
    setup_bench_nps(*bench, raw);
    setup_bench_hu(*bench, raw);
    setup_diff(*bench, raw, "bench diff");
    setup_bench_suite(*bench, raw);
}

// ---- tune ------------------------------------------------------------------

struct TuneState {
    std::string paradigm = "global";
    std::string stages;
    std::string data;
    int tune_epochs = 5;
    int final_epochs = 30;
    int minibatch = 128;
    double lr = 1e-3;
    std::uint64_t seed = 0;
    bool deterministic = false;
    int threads = 0;
    SuiteFlags suite;
    std::string out;
};

void run_tune(TuneState& st, const CLI::App* c, const std::vector<std::string>& raw) {
    require_seed(c);
    apply_threads(st.deterministic, st.threads);
    Run run("tune", raw, st.out);
    run.add_input(st.data);

    const std::vector<ExperimentStage> stages =
        st.stages.empty() ? default_stages() : read_stages(st.stages);
    if (!st.stages.empty()) run.add_input(st.stages);
    const ObjectiveKind kind = objective_kind_from_string(st.paradigm);
    const TuningData data = read_pairs(st.data);
    if (data.tuning_set.empty())
        throw DataError(st.data + ": \"tuning\" is empty; tuning needs a held-out scoring set");

    TrainSetup base;
    base.train.epochs = st.tune_epochs;
    base.train.minibatch = st.minibatch;
    base.train.learning_rate = st.lr;
    base.train.seed = st.seed;

    fs::create_directories(run.dir() / "models");
    int eval_index = 0;

    const auto tuning_means = [&](const Denoiser& d, double& psnr_mean, double& ssim_mean) {
        psnr_mean = ssim_mean = 0.0;
        for (const auto& [ld, nd] : data.tuning_set) {
            const Image out = d.apply(ld, "tuning");
            psnr_mean += psnr(out, nd);
            ssim_mean += ssim(out, nd);
        }
        psnr_mean /= static_cast<double>(data.tuning_set.size());
        ssim_mean /= static_cast<double>(data.tuning_set.size());
    };

    // Candidate weights land in models/eval_NNN.*, in table-row order.
    const auto train_candidate = [&](const TrainSetup& setup) {
        const int index = eval_index++;
        const Cnn3Model model = train_from_pairs(data.train_pairs, setup);
        write_cnn3_model(model, run.dir() / "models" / fmt("eval_%03d", index));
        return model;
    };

    ObjectiveFn objective;
    std::optional<BenchSuiteConfig> suite_cfg;
    SimulationCache cache(env_cache_dir());
    if (kind == ObjectiveKind::global) {
        objective = [&](const TrainSetup& setup) {
            const auto d = make_cnn3_denoiser(train_candidate(setup));
            CandidateScore score;
            tuning_means(*d, score.psnr, score.ssim);
            return score;
        };
    } else {
        suite_cfg = to_suite_config(st.suite);
        suite_cfg->seed = st.seed;
        const BenchReport baseline = run_bench_suite(*make_identity_denoiser(), *suite_cfg, &cache);
        double ldct_psnr = 0.0;
        for (const auto& [ld, nd] : data.tuning_set)
            ldct_psnr += psnr(ld, nd) / static_cast<double>(data.tuning_set.size());
        objective = [&, baseline, ldct_psnr](const TrainSetup& setup) {
            const auto d = make_cnn3_denoiser(train_candidate(setup));
            CandidateScore score;
            tuning_means(*d, score.psnr, score.ssim);
            const BenchReport report = run_bench_suite(*d, *suite_cfg, &cache);
            const BenchScore b = compose_bench_score(report, baseline, score.psnr, ldct_psnr);
            score.composite = b.composite;
            score.resolution = b.resolution;
            score.texture = b.texture;
            score.hu = b.hu;
            return score;
        };
    }

    const TuneResult result = greedy_tune(stages, base, kind, objective);
    write_stages(stages, run.dir() / "stages.json");
    write_tune_table_csv(result, run.dir() / "table.csv");

    TrainSetup final_setup = result.winner;
    final_setup.train.epochs = st.final_epochs;
    const Cnn3Model final_model = train_from_pairs(data.train_pairs, final_setup);
    write_cnn3_model(final_model, run.dir() / "model");

    const StageRow* winner_row = nullptr;
    for (const auto& row : result.table)
        if (row.winner) winner_row = &row;
    json winner{{"paradigm", to_string(kind)},
                {"setup", setup_json(final_setup)},
                {"tune_epochs", st.tune_epochs},
                {"final_epochs", st.final_epochs}};
    if (winner_row) {
        winner["stage"] = winner_row->stage;
        winner["label"] = winner_row->label;
        winner["score"] = json{{"psnr", winner_row->score.psnr},
                               {"ssim", winner_row->score.ssim},
                               {"composite", winner_row->score.composite}};
    }
    write_text(run.dir() / "winner.json", winner.dump(2) + "\n");

    run.config() = json{{"paradigm", st.paradigm},
                        {"data", st.data},
                        {"stages", st.stages.empty() ? "(default)" : st.stages},
                        {"base", setup_json(base)},
                        {"final_epochs", st.final_epochs},
                        {"deterministic", st.deterministic}};
    if (suite_cfg) run.config()["suite"] = suite_json(*suite_cfg);
    run.finish();
    std::printf("wrote %s\n", st.out.c_str());
}

void setup_tune(CLI::App& app, const std::vector<std::string>& raw) {
    auto* c = app.add_subcommand("tune", "stage-wise greedy hyperparameter search");
    auto st = std::make_shared<TuneState>();
    c->add_option("--paradigm", st->paradigm, "selection rule")
        ->check(CLI::IsMember({"global", "bench"}));
    c->add_option("--stages", st->stages, "stage definitions JSON (default: builtin sequence)");
    c->add_option("--data", st->data, "pairs manifest JSON")->required();
    c->add_option("--tune-epochs", st->tune_epochs, "epochs per candidate");
    c->add_option("--final-epochs", st->final_epochs, "epochs for the winner's full run");
    c->add_option("--minibatch", st->minibatch, "minibatch size");
    c->add_option("--lr", st->lr, "base learning rate");
    c->add_option("--seed", st->seed, "training seed (shared by every candidate)");
    c->add_flag("--deterministic", st->deterministic, "single-threaded, order-fixed run");
    c->add_option("--threads", st->threads, "worker cap (0 = all cores)");
    add_suite_flags(c, st->suite, "suite-");
    c->add_option("--out", st->out, "run directory")->required();
    c->callback([st, c, &raw] { run_tune(*st, c, raw); });
}

// ---- report ----------------------------------------------------------------

std::vector<std::array<double, 2>> read_two_column_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    std::vector<std::array<double, 2>> rows;
    std::string line;
    std::getline(in, line); // header
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw DataError(path.string() + ": malformed row " + line);
        rows.push_back({std::stod(line.substr(0, comma)), std::stod(line.substr(comma + 1))});
    }
    return rows;
}

const std::array<std::uint8_t, 3> kPalette[] = {
    {31, 119, 180}, {214, 39, 40}, {44, 160, 44}, {148, 103, 189},
    {255, 127, 14}, {23, 190, 207}, {127, 127, 127},
};

void setup_report(CLI::App& app, const std::vector<std::string>& raw) {
    auto* c = app.add_subcommand("report", "render plots and a Markdown summary for a run");
    auto dir = std::make_shared<std::string>();
    auto out_opt = std::make_shared<std::string>();
    c->add_option("--run", *dir, "run directory to summarize")->required();
    c->add_option("--out", *out_opt, "output directory (default: the run directory)");
    c->callback([dir, out_opt, &raw] {
        const fs::path run_dir = *dir;
        if (!fs::is_directory(run_dir)) throw DataError("not a directory: " + run_dir.string());
        const fs::path out = out_opt->empty() ? run_dir : fs::path(*out_opt);
        fs::create_directories(out);
        const bool own_run = !out_opt->empty() && !fs::equivalent(out, run_dir);

        std::string md = "# ctbench report\n\n";
        std::vector<std::string> rendered, missing;

        // MTF curves (bench mtf runs).
        std::vector<fs::path> mtf_files;
        for (const auto& e : fs::directory_iterator(run_dir))
            if (e.path().filename().string().rfind("mtf_", 0) == 0 &&
                e.path().extension() == ".csv")
                mtf_files.push_back(e.path());
        std::sort(mtf_files.begin(), mtf_files.end());
        if (!mtf_files.empty()) {
            std::vector<PlotSeries> series;
            for (std::size_t i = 0; i < mtf_files.size(); ++i) {
                const MtfCurve curve = read_mtf_csv(mtf_files[i]);
                PlotSeries s;
                s.x = curve.freqs;
                s.y = curve.values;
                s.color = kPalette[i % std::size(kPalette)];
                s.label = mtf_files[i].stem().string().substr(4) + " HU";
                series.push_back(std::move(s));
            }
            PlotOptions opt;
            opt.title = "MTF BY CONTRAST";
            opt.x_label = "LP/MM";
            opt.y_label = "MTF";
            write_line_plot_png(series, opt, out / "mtf.png");
            rendered.push_back("mtf.png");
        } else {
            missing.push_back("mtf_*.csv");
        }

        // Radial NPS (bench nps / suite runs).
        if (fs::exists(run_dir / "nps.csv")) {
            const auto rows = read_two_column_csv(run_dir / "nps.csv");
            PlotSeries s;
            for (const auto& r : rows) {
                s.x.push_back(r[0]);
                s.y.push_back(r[1]);
            }
            s.color = kPalette[0];
            s.label = "RADIAL NPS";
            PlotOptions opt;
            opt.title = "RADIAL NPS";
            opt.x_label = "LP/MM";
            opt.y_label = "HU2 MM2";
            write_line_plot_png({s}, opt, out / "nps_radial.png");
            rendered.push_back("nps_radial.png");
        } else {
            missing.push_back("nps.csv");
        }

        // HU line profile (bench hu runs): columns pos_mm, hu, ref_hu.
        if (fs::exists(run_dir / "profile.csv")) {
            std::ifstream in(run_dir / "profile.csv");
            std::string line;
            std::getline(in, line);
            PlotSeries meas, ref;
            while (std::getline(in, line)) {
                if (line.empty()) continue;
                const auto c1 = line.find(','), c2 = line.find(',', c1 + 1);
                if (c1 == std::string::npos || c2 == std::string::npos)
                    throw DataError("profile.csv: malformed row " + line);
                const double x = std::stod(line.substr(0, c1));
                meas.x.push_back(x);
                meas.y.push_back(std::stod(line.substr(c1 + 1, c2 - c1 - 1)));
                ref.x.push_back(x);
                ref.y.push_back(std::stod(line.substr(c2 + 1)));
            }
            meas.color = kPalette[0];
            meas.label = "MEASURED";
            ref.color = kPalette[1];
            ref.label = "REFERENCE";
            PlotOptions opt;
            opt.title = "HU LINE PROFILE";
            opt.x_label = "MM";
            opt.y_label = "HU";
            write_line_plot_png({meas, ref}, opt, out / "profile.png");
            rendered.push_back("profile.png");
        }

        // Training loss curve.
        if (fs::exists(run_dir / "train_log.csv")) {
            const auto rows = read_two_column_csv(run_dir / "train_log.csv");
            PlotSeries s;
            for (const auto& r : rows) {
                s.x.push_back(r[0]);
                s.y.push_back(r[1]);
            }
            s.color = kPalette[0];
            s.label = "LOSS";
            PlotOptions opt;
            opt.title = "TRAINING LOSS";
            opt.x_label = "EPOCH";
            opt.y_label = "LOSS";
            opt.log_y = true;
            write_line_plot_png({s}, opt, out / "loss.png");
            rendered.push_back("loss.png");
        }

        // Difference image render.
        if (fs::exists(run_dir / "diff.f32") && !fs::exists(run_dir / "diff.png")) {
            write_windowed_png(read_image(run_dir / "diff.f32"), DisplayWindow{122.0, 61.0},
                               out / "diff.png");
            rendered.push_back("diff.png");
        }

        // Tables from the structured artifacts.
        const auto add_json_table = [&](const fs::path& p, const std::string& title) {
            if (!fs::exists(p)) return false;
            std::ifstream in(p);
            const json j = json::parse(in);
            md += "## " + title + "\n\n| key | value |\n|---|---|\n";
            for (const auto& [k, v] : j.items()) md += "| " + k + " | " + v.dump() + " |\n";
            md += "\n";
            return true;
        };
        add_json_table(run_dir / "mtf50.json", "MTF50 by contrast (lp/mm)");
        add_json_table(run_dir / "hu.json", "HU accuracy");
        add_json_table(run_dir / "metrics.json", "Global metrics");
        add_json_table(run_dir / "summary.json", "Training summary");
        add_json_table(run_dir / "winner.json", "Tuning winner");

        if (fs::exists(run_dir / "table.csv")) {
            std::ifstream in(run_dir / "table.csv");
            std::string line;
            md += "## Tuning table\n\n";
            bool header = true;
            while (std::getline(in, line)) {
                if (line.empty()) continue;
                std::string row = "| ";
                for (const char ch : line) row += ch == ',' ? std::string(" | ") : std::string(1, ch);
                md += row + " |\n";
                if (header) {
                    md += "|";
                    for (const char ch : line)
                        if (ch == ',') md += "---|";
                    md += "---|\n";
                    header = false;
                }
            }
            md += "\n";
            rendered.push_back("table.csv -> report.md");
        }

        if (fs::exists(run_dir / "report.json")) {
            std::ifstream in(run_dir / "report.json");
            const json j = json::parse(in);
            md += "## Bench report\n\n| measure | value |\n|---|---|\n";
            for (const char* key : {"mtf50_by_contrast", "psnr", "ssim", "composite_score"})
                if (j.contains(key)) md += std::string("| ") + key + " | " + j[key].dump() + " |\n";
            md += "\n";
            rendered.push_back("report.json -> report.md");
        }

        if (rendered.empty())
            throw DataError("nothing to render in " + run_dir.string() +
                            "; missing: " + [&] {
                                std::string s;
                                for (const auto& m : missing) s += m + " ";
                                return s;
                            }() +
                            "(expected artifacts of scan/train/bench/tune runs)");

        md += "## Rendered artifacts\n\n";
        for (const auto& r : rendered) md += "- " + r + "\n";
        write_text(out / "report.md", md);

        if (own_run) {
            Run run("report", raw, out.string());
            run.add_input(run_dir.string());
            run.config() = json{{"run", run_dir.string()}};
            run.finish();
        }
        std::printf("wrote %s\n", (out / "report.md").string().c_str());
    });
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"CT image-quality bench toolkit"};
    app.require_subcommand(1);
    const std::vector<std::string> raw(argv + 1, argv + argc);

    setup_phantom(app, raw);
    setup_scan(app, raw, false);
    setup_scan(app, raw, true);
    setup_train(app, raw);
    setup_denoise(app, raw);
    setup_metrics(app, raw);
    setup_bench(app, raw);
    setup_tune(app, raw);
    setup_diff(app, raw, "diff");
    setup_report(app, raw);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    } catch (const DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 2;
    } catch (const NumericalError& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
