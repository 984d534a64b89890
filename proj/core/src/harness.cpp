#include "ctbench/harness.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <memory>
#include <optional>

#include <nlohmann/json.hpp>

#include "ctbench/errors.hpp"
#include "ctbench/metrics.hpp"

namespace ctbench {

std::string to_string(ObjectiveKind kind) {
    return kind == ObjectiveKind::global ? "global" : "bench";
}

ObjectiveKind objective_kind_from_string(const std::string& s) {
    if (s == "global") return ObjectiveKind::global;
    if (s == "bench") return ObjectiveKind::bench;
    throw DataError("unknown objective '" + s + "'");
}

// ---- TrainSetup serialization --------------------------------------------

static nlohmann::json setup_json(const TrainSetup& s) {
    return {{"preprocess",
             {{"normalization", to_string(s.pre.normalization)},
              {"patch", s.pre.patch_size},
              {"stride", s.pre.patch_stride},
              {"augment",
               {{"scale", s.pre.augment.scale},
                {"rotate_flip", s.pre.augment.rotate_flip},
                {"dose_blend", s.pre.augment.dose_blend},
                {"gamma_low", s.pre.augment.gamma_low},
                {"gamma_high", s.pre.augment.gamma_high}}}}},
            {"loss",
             {{"kind", to_string(s.loss.kind)},
              {"lambda", s.loss.lambda},
              {"beta", s.loss.beta},
              {"alpha", s.loss.alpha}}},
            {"train",
             {{"lr", s.train.learning_rate},
              {"minibatch", s.train.minibatch},
              {"epochs", s.train.epochs},
              {"seed", s.train.seed},
              {"optimizer", to_string(s.train.optimizer)}}}};
}

std::string train_setup_to_json(const TrainSetup& setup) {
    return setup_json(setup).dump(2) + "\n";
}

TrainSetup train_setup_from_json(const std::string& text) {
    TrainSetup s;
    try {
        const auto j = nlohmann::json::parse(text);
        const auto& p = j.at("preprocess");
        s.pre.normalization = normalization_from_string(p.at("normalization").get<std::string>());
        s.pre.patch_size = p.at("patch").get<int>();
        s.pre.patch_stride = p.value("stride", 0);
        const auto& a = p.at("augment");
        s.pre.augment.scale = a.at("scale").get<bool>();
        s.pre.augment.rotate_flip = a.at("rotate_flip").get<bool>();
        s.pre.augment.dose_blend = a.at("dose_blend").get<bool>();
        s.pre.augment.gamma_low = a.value("gamma_low", 0.5);
        s.pre.augment.gamma_high = a.value("gamma_high", 1.2);
        const auto& l = j.at("loss");
        s.loss.kind = loss_kind_from_string(l.at("kind").get<std::string>());
        s.loss.lambda = l.at("lambda").get<double>();
        s.loss.beta = l.at("beta").get<double>();
        s.loss.alpha = l.at("alpha").get<double>();
        const auto& t = j.at("train");
        s.train.learning_rate = t.at("lr").get<double>();
        s.train.minibatch = t.at("minibatch").get<int>();
        s.train.epochs = t.at("epochs").get<int>();
        s.train.seed = t.at("seed").get<std::uint64_t>();
        s.train.optimizer = optimizer_from_string(t.at("optimizer").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("train setup json: ") + e.what());
    }
    return s;
}

// ---- candidate deltas ----------------------------------------------------

namespace {

double parse_num(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw DataError("bad value '" + value + "' for '" + key + "'");
    }
}

int parse_int(const std::string& key, const std::string& value) {
    const double v = parse_num(key, value);
    if (v != std::floor(v)) throw DataError("'" + key + "' wants an integer, got " + value);
    return static_cast<int>(v);
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw DataError("bad value '" + value + "' for '" + key + "'");
}

} // namespace

void apply_delta(TrainSetup& setup, const std::map<std::string, std::string>& delta) {
    for (const auto& [key, value] : delta) {
        if (key == "patch")
            setup.pre.patch_size = parse_int(key, value);
        else if (key == "stride")
            setup.pre.patch_stride = parse_int(key, value);
        else if (key == "normalization")
            setup.pre.normalization = normalization_from_string(value);
        else if (key == "lr")
            setup.train.learning_rate = parse_num(key, value);
        else if (key == "minibatch")
            setup.train.minibatch = parse_int(key, value);
        else if (key == "epochs")
            setup.train.epochs = parse_int(key, value);
        else if (key == "optimizer")
            setup.train.optimizer = optimizer_from_string(value);
        else if (key == "loss")
            setup.loss.kind = loss_kind_from_string(value);
        else if (key == "lambda")
            setup.loss.lambda = parse_num(key, value);
        else if (key == "beta")
            setup.loss.beta = parse_num(key, value);
        else if (key == "alpha")
            setup.loss.alpha = parse_num(key, value);
        else if (key == "aug_scale")
            setup.pre.augment.scale = parse_bool(key, value);
        else if (key == "aug_rotate_flip")
            setup.pre.augment.rotate_flip = parse_bool(key, value);
        else if (key == "aug_dose_blend")
            setup.pre.augment.dose_blend = parse_bool(key, value);
        else
            throw DataError("unknown config field '" + key + "'");
    }
}

std::vector<ExperimentStage> default_stages() {
    std::vector<ExperimentStage> stages;
    ExperimentStage patch{"patch size", {}};
    for (const char* p : {"32", "55", "64", "96"})
        patch.candidates.push_back({p, {{"patch", p}}});
    stages.push_back(patch);

    ExperimentStage lr{"learning rate", {}};
    for (const char* r : {"1e-1", "1e-2", "1e-3", "1e-4"})
        lr.candidates.push_back({r, {{"lr", r}}});
    stages.push_back(lr);

    ExperimentStage mb{"minibatch", {}};
    for (const char* m : {"64", "128", "256", "512"})
        mb.candidates.push_back({m, {{"minibatch", m}}});
    stages.push_back(mb);

    ExperimentStage loss{"loss", {}};
    for (LossKind k : kAllLossKinds)
        loss.candidates.push_back({to_string(k), {{"loss", to_string(k)}}});
    stages.push_back(loss);
    return stages;
}

std::vector<ExperimentStage> read_stages(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError(path.string() + ": " + e.what());
    }
    std::vector<ExperimentStage> stages;
    try {
        for (const auto& js : j) {
            ExperimentStage stage;
            stage.name = js.at("name").get<std::string>();
            for (const auto& jc : js.at("candidates")) {
                StageCandidate c;
                c.label = jc.at("label").get<std::string>();
                for (const auto& [k, v] : jc.at("delta").items())
                    c.delta[k] = v.get<std::string>();
                stage.candidates.push_back(std::move(c));
            }
            stages.push_back(std::move(stage));
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path.string() + ": " + e.what());
    }
    if (stages.empty()) throw DataError(path.string() + ": no stages");
    for (const auto& s : stages)
        if (s.candidates.size() < 2)
            throw DataError("stage '" + s.name + "' needs at least 2 candidates");
    return stages;
}

void write_stages(const std::vector<ExperimentStage>& stages,
                  const std::filesystem::path& path) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& s : stages) {
        nlohmann::json cands = nlohmann::json::array();
        for (const auto& c : s.candidates)
            cands.push_back({{"label", c.label}, {"delta", c.delta}});
        j.push_back({{"name", s.name}, {"candidates", cands}});
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out << j.dump(2) << "\n";
}

// ---- bench suite ---------------------------------------------------------

static nlohmann::json finite_or_null(double v) {
    if (std::isfinite(v)) return v;
    return nullptr;
}

std::string bench_report_to_json(const BenchReport& report) {
    nlohmann::json mtf = nlohmann::json::object();
    for (const auto& [c, v] : report.mtf50_by_contrast) {
        char key[32];
        std::snprintf(key, sizeof key, "%g", c);
        mtf[key] = v;
    }
    nlohmann::json hu = nlohmann::json::object();
    for (const auto& [c, acc] : report.hu_by_contrast) {
        char key[32];
        std::snprintf(key, sizeof key, "%g", c);
        hu[key] = {{"plateau_bias", acc.plateau_bias},
                   {"plateau_mad", acc.plateau_mad},
                   {"edge_overshoot", acc.edge_overshoot}};
    }
    nlohmann::json j{{"mtf50_by_contrast", mtf},
                     {"nps", {{"freqs", report.nps_freqs}, {"values", report.nps_values}}},
                     {"nps_distance", report.nps_distance},
                     {"hu_by_contrast", hu},
                     {"psnr", finite_or_null(report.psnr)},
                     {"ssim", finite_or_null(report.ssim)},
                     {"composite_score", report.composite_score}};
    return j.dump(2) + "\n";
}

void write_bench_report(const BenchReport& report, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out << bench_report_to_json(report);
}

namespace {

std::string geometry_key(const ScanGeometry& g) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "views=%d|det=%d|tau=%.9g|i0=%.9g|kernel=%s", g.n_views,
                  g.n_detectors, g.detector_spacing_mm, g.i0,
                  g.kernel == ReconKernel::sharp ? "sharp" : "smooth");
    return buf;
}

std::string scan_key(const BenchSuiteConfig& cfg, const std::string& phantom,
                     std::uint64_t seed) {
    char buf[240];
    std::snprintf(buf, sizeof buf, "scan|%s|%s|w=%d|h=%d|sp=%.9g|ss=%d|dose=%.9g|seed=%llu|body=%.9g",
                  phantom.c_str(), geometry_key(cfg.geom).c_str(), cfg.width, cfg.height,
                  cfg.pixel_spacing_mm, cfg.supersample, cfg.dose,
                  static_cast<unsigned long long>(seed), cfg.body_radius_mm);
    return buf;
}

Image mean_image(const std::vector<Image>& imgs) {
    Image out = imgs[0];
    std::vector<double> acc(out.size(), 0.0);
    for (const auto& img : imgs)
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += img.data[i];
    for (std::size_t i = 0; i < acc.size(); ++i)
        out.data[i] = static_cast<float>(acc[i] / imgs.size());
    return out;
}

} // namespace

BenchReport run_bench_suite(const Denoiser& denoiser, const BenchSuiteConfig& cfg,
                            SimulationCache* cache) {
    SimulationCache local;
    if (!cache) cache = &local;
    if (cfg.n_contrast < 1 || cfg.n_water < 2)
        throw DataError("bench suite needs >= 1 contrast and >= 2 water realizations");

    const PhantomSpec contrast = make_contrast_phantom(cfg.body_radius_mm);
    const PhantomSpec water = make_water_cylinder(cfg.body_radius_mm);
    const Image contrast_hu = rasterize(contrast, cfg.width, cfg.height, cfg.pixel_spacing_mm,
                                        cfg.supersample);
    const Image water_hu = rasterize(water, cfg.width, cfg.height, cfg.pixel_spacing_mm,
                                     cfg.supersample);

    // MTF and HU accuracy: mean over the denoised contrast-phantom ensemble
    // (averaging after denoising keeps nonlinear models honest).
    std::vector<Image> denoised_contrast;
    denoised_contrast.reserve(cfg.n_contrast);
    for (int k = 0; k < cfg.n_contrast; ++k) {
        const std::uint64_t seed = cfg.seed + 1000000 + k;
        char name[40];
        std::snprintf(name, sizeof name, "contrast_%03d", k);
        const Image scan = cache->get_or_compute(scan_key(cfg, "contrast", seed), [&] {
            return simulate_scan(contrast_hu, cfg.geom, cfg.dose, seed);
        });
        denoised_contrast.push_back(denoiser.apply(scan, name));
    }
    const Image contrast_mean = mean_image(denoised_contrast);

    BenchReport report;
    for (std::size_t i = 0; i < contrast.inserts.size(); ++i) {
        const DiskInsert& ins = contrast.inserts[i];
        const MtfCurve mtf = mtf_from_disk(contrast_mean, ins, contrast.body_hu);
        report.mtf50_by_contrast[ins.hu] = mtf.mtf50;
        const LineProfile profile =
            line_profile(contrast_mean, contrast, static_cast<int>(i), ProfileAxis::horizontal);
        report.hu_by_contrast[ins.hu] = hu_accuracy(profile);
    }

    // NPS: denoised water-cylinder ensemble, central square ROI.
    std::vector<Image> denoised_water;
    denoised_water.reserve(cfg.n_water);
    for (int k = 0; k < cfg.n_water; ++k) {
        const std::uint64_t seed = cfg.seed + 2000000 + k;
        char name[40];
        std::snprintf(name, sizeof name, "water_%03d", k);
        const Image scan = cache->get_or_compute(scan_key(cfg, "water", seed), [&] {
            return simulate_scan(water_hu, cfg.geom, cfg.dose, seed);
        });
        denoised_water.push_back(denoiser.apply(scan, name));
    }
    const Roi roi{(cfg.width - cfg.nps_roi) / 2, (cfg.height - cfg.nps_roi) / 2, cfg.nps_roi,
                  cfg.nps_roi};
    const NpsResult nps = nps_estimate(denoised_water, roi);
    report.nps_freqs = nps.radial_freqs;
    report.nps_values = nps.radial_values;

    report.psnr = std::numeric_limits<double>::quiet_NaN();
    report.ssim = std::numeric_limits<double>::quiet_NaN();
    return report;
}

BenchScore compose_bench_score(const BenchReport& model, const BenchReport& baseline,
                               double model_psnr, double ldct_psnr,
                               const CompositeWeights& weights) {
    BenchScore score;
    if (baseline.mtf50_by_contrast.empty() || baseline.nps_values.empty() ||
        baseline.hu_by_contrast.empty())
        throw DataError("baseline report is incomplete");

    double res_sum = 0.0;
    for (const auto& [c, base50] : baseline.mtf50_by_contrast) {
        const auto it = model.mtf50_by_contrast.find(c);
        if (it == model.mtf50_by_contrast.end())
            throw DataError("model report is missing an MTF contrast");
        res_sum += std::min(1.0, it->second / base50);
    }
    score.resolution = res_sum / baseline.mtf50_by_contrast.size();

    if (model.nps_values.size() != baseline.nps_values.size())
        throw DataError("model and baseline NPS grids differ");
    // Shape comparison: both radial curves scaled to unit area first.
    double area_m = 0.0, area_b = 0.0;
    for (double v : model.nps_values) area_m += v;
    for (double v : baseline.nps_values) area_b += v;
    if (!(area_b > 0.0)) throw DataError("baseline NPS is empty");
    double dist2 = 0.0, norm2 = 0.0;
    for (std::size_t i = 0; i < baseline.nps_values.size(); ++i) {
        const double nb = baseline.nps_values[i] / area_b;
        const double nm = area_m > 0.0 ? model.nps_values[i] / area_m : 0.0;
        dist2 += (nm - nb) * (nm - nb);
        norm2 += nb * nb;
    }
    const double distance = std::min(1.0, std::sqrt(dist2 / norm2));
    score.texture = 1.0 - distance;

    double mad_sum = 0.0;
    for (const auto& [c, acc] : model.hu_by_contrast) {
        (void)c;
        mad_sum += acc.plateau_mad;
    }
    const double mean_mad = mad_sum / model.hu_by_contrast.size();
    score.hu = std::max(0.0, 1.0 - mean_mad / weights.hu_scale);

    const double wsum = weights.resolution + weights.texture + weights.hu;
    score.composite = (weights.resolution * score.resolution + weights.texture * score.texture +
                       weights.hu * score.hu) /
                      wsum;
    if (model_psnr < ldct_psnr) score.composite = 0.0; // tuning-set floor
    return score;
}

// ---- greedy tuning -------------------------------------------------------

bool candidate_better(const CandidateScore& a, const CandidateScore& b, ObjectiveKind kind) {
    if (a.failed) return false;
    if (b.failed) return true;
    if (kind == ObjectiveKind::bench) return a.composite > b.composite;
    const bool both_inf = std::isinf(a.psnr) && std::isinf(b.psnr) && a.psnr > 0 && b.psnr > 0;
    if (!both_inf) {
        if (a.psnr > b.psnr + 0.01) return true;
        if (b.psnr > a.psnr + 0.01) return false;
    }
    return a.ssim > b.ssim; // tie within 0.01 dB
}

TuneResult greedy_tune(const std::vector<ExperimentStage>& stages, const TrainSetup& base,
                       ObjectiveKind kind, const ObjectiveFn& objective) {
    if (stages.empty()) throw DataError("no stages");
    TuneResult result;
    TrainSetup current = base;
    for (const auto& stage : stages) {
        if (stage.candidates.size() < 2)
            throw DataError("stage '" + stage.name + "' needs at least 2 candidates");
        int best = -1;
        std::vector<CandidateScore> scores(stage.candidates.size());
        const std::size_t row0 = result.table.size();
        for (std::size_t i = 0; i < stage.candidates.size(); ++i) {
            const auto& cand = stage.candidates[i];
            CandidateScore score;
            try {
                TrainSetup setup = current;
                apply_delta(setup, cand.delta);
                score = objective(setup);
            } catch (const std::exception& e) {
                score.failed = true;
                score.error = e.what();
            }
            scores[i] = score;
            result.table.push_back({stage.name, cand.label, score, false});
            if (!score.failed &&
                (best < 0 || candidate_better(score, scores[best], kind)))
                best = static_cast<int>(i);
        }
        if (best < 0) throw DataError("stage '" + stage.name + "': all candidates failed");
        apply_delta(current, stage.candidates[best].delta);
        result.table[row0 + best].winner = true;
    }
    result.winner = current;
    return result;
}

void write_tune_table_csv(const TuneResult& result, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out << "stage,candidate,psnr,ssim,composite,resolution,texture,hu,failed,winner\n";
    for (const auto& row : result.table) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "%.6g,%.6g,%.6g,%.6g,%.6g,%.6g", row.score.psnr,
                      row.score.ssim, row.score.composite, row.score.resolution,
                      row.score.texture, row.score.hu);
        out << row.stage << "," << row.label << "," << buf << "," << (row.score.failed ? 1 : 0)
            << "," << (row.winner ? 1 : 0) << "\n";
    }
}

// ---- end-to-end objectives -----------------------------------------------

Cnn3Model train_from_pairs(const std::vector<std::pair<Image, Image>>& pairs,
                           const TrainSetup& setup,
                           const std::function<void(int, double)>& on_epoch) {
    const auto patches = make_patch_set(pairs, setup.pre, setup.train.seed);
    const TrainResult trained = cnn3_train(patches, setup.loss, setup.train, on_epoch);
    Cnn3Model model;
    model.weights = trained.weights;
    model.normalization = setup.pre.normalization;
    return model;
}

namespace {

// Mean PSNR/SSIM of denoised tuning-set inputs against their references.
std::pair<double, double> tuning_set_metrics(const Denoiser& d,
                                             const std::vector<std::pair<Image, Image>>& set) {
    if (set.empty()) throw DataError("empty tuning set");
    double psnr_sum = 0.0, ssim_sum = 0.0;
    for (std::size_t i = 0; i < set.size(); ++i) {
        const Image out = d.apply(set[i].first, std::to_string(i));
        psnr_sum += psnr(out, set[i].second);
        ssim_sum += ssim(out, set[i].second);
    }
    return {psnr_sum / set.size(), ssim_sum / set.size()};
}

} // namespace

ObjectiveFn make_global_objective(const TuningData& data) {
    auto shared = std::make_shared<TuningData>(data);
    return [shared](const TrainSetup& setup) {
        const Cnn3Model model = train_from_pairs(shared->train_pairs, setup);
        const auto denoiser = make_cnn3_denoiser(model);
        const auto [mean_psnr, mean_ssim] = tuning_set_metrics(*denoiser, shared->tuning_set);
        CandidateScore score;
        score.psnr = mean_psnr;
        score.ssim = mean_ssim;
        return score;
    };
}

ObjectiveFn make_bench_objective(const TuningData& data, const BenchSuiteConfig& suite,
                                 SimulationCache* cache, const CompositeWeights& weights) {
    struct State {
        TuningData data;
        BenchSuiteConfig suite;
        SimulationCache* cache;
        CompositeWeights weights;
        std::optional<BenchReport> baseline;
        double ldct_psnr = 0.0;
    };
    auto st = std::make_shared<State>(State{data, suite, cache, weights, {}, 0.0});
    return [st](const TrainSetup& setup) {
        if (!st->baseline) {
            st->baseline = run_bench_suite(*make_identity_denoiser(), st->suite, st->cache);
            double sum = 0.0;
            if (st->data.tuning_set.empty()) throw DataError("empty tuning set");
            for (const auto& [ld, nd] : st->data.tuning_set) sum += psnr(ld, nd);
            st->ldct_psnr = sum / st->data.tuning_set.size();
        }
        const Cnn3Model model = train_from_pairs(st->data.train_pairs, setup);
        const auto denoiser = make_cnn3_denoiser(model);
        const auto [mean_psnr, mean_ssim] = tuning_set_metrics(*denoiser, st->data.tuning_set);
        const BenchReport report = run_bench_suite(*denoiser, st->suite, st->cache);
        const BenchScore bs =
            compose_bench_score(report, *st->baseline, mean_psnr, st->ldct_psnr, st->weights);
        CandidateScore score;
        score.psnr = mean_psnr;
        score.ssim = mean_ssim;
        score.composite = bs.composite;
        score.resolution = bs.resolution;
        score.texture = bs.texture;
        score.hu = bs.hu;
        return score;
    };
}

} // namespace ctbench
