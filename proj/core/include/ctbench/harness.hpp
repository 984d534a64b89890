#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "ctbench/bench.hpp"
#include "ctbench/denoiser.hpp"
#include "ctbench/loss.hpp"
#include "ctbench/preprocess.hpp"
#include "ctbench/scanner.hpp"

namespace ctbench {

/// Everything a tuning candidate can change: preprocessing, loss, training.
struct TrainSetup {
    PreprocessConfig pre;
    LossConfig loss;
    TrainConfig train;
};

std::string train_setup_to_json(const TrainSetup& setup);
TrainSetup train_setup_from_json(const std::string& text);

/// Config delta of one tuning candidate, as field -> value strings.
/// Keys: patch, stride, normalization, lr, minibatch, epochs, optimizer,
/// loss, lambda, beta, alpha, aug_scale, aug_rotate_flip, aug_dose_blend.
struct StageCandidate {
    std::string label;
    std::map<std::string, std::string> delta;
};

struct ExperimentStage {
    std::string name;
    std::vector<StageCandidate> candidates;
};

/// Applies a candidate delta; throws DataError on unknown keys or bad values.
void apply_delta(TrainSetup& setup, const std::map<std::string, std::string>& delta);

/// The default experiment sequence: patch size (32/55/64/96), then learning
/// rate (1e-1..1e-4), then minibatch (64/128/256/512), then loss kind.
std::vector<ExperimentStage> default_stages();

std::vector<ExperimentStage> read_stages(const std::filesystem::path& path);
void write_stages(const std::vector<ExperimentStage>& stages, const std::filesystem::path& path);

// ---- bench suite ---------------------------------------------------------

/// Memoizes simulated reconstructions by a descriptive key. In-memory always;
/// if dir is set (or CTBENCH_CACHE_DIR at construction via env_cache_dir),
/// entries persist as .f32 files across processes.
class SimulationCache {
public:
    SimulationCache() = default;
    explicit SimulationCache(std::filesystem::path dir);

    Image get_or_compute(const std::string& key, const std::function<Image()>& compute);
    std::size_t hits() const;
    std::size_t misses() const;
    void clear();

private:
    mutable std::mutex mu_;
    std::unordered_map<std::string, Image> mem_;
    std::filesystem::path dir_;
    std::size_t hits_ = 0;
    std::size_t misses_ = 0;
};

/// Reads CTBENCH_CACHE_DIR; empty path when unset.
std::filesystem::path env_cache_dir();

struct BenchSuiteConfig {
    ScanGeometry geom;
    int width = 512, height = 512;
    double pixel_spacing_mm = 0.5;
    double body_radius_mm = 100.0;
    int supersample = 8;
    double dose = 0.25;       ///< low-dose fraction for every simulated scan.
    int n_contrast = 50;      ///< contrast-phantom realizations (MTF/HU use their mean).
    int n_water = 50;         ///< water-cylinder realizations for the NPS.
    int nps_roi = 128;        ///< central square ROI side, px.
    std::uint64_t seed = 0;
};

struct BenchReport {
    std::map<double, double> mtf50_by_contrast;    ///< insert HU -> mtf50 (lp/mm).
    std::vector<double> nps_freqs;                 ///< radial NPS bin centers, lp/mm.
    std::vector<double> nps_values;                ///< radial NPS, HU^2 mm^2.
    double nps_distance = 0.0;                     ///< vs. baseline, filled by scoring.
    std::map<double, HuAccuracy> hu_by_contrast;   ///< insert HU -> plateau stats.
    double psnr = 0.0, ssim = 0.0;                 ///< tuning-set means (NaN when unused).
    double composite_score = 0.0;
};

std::string bench_report_to_json(const BenchReport& report);
void write_bench_report(const BenchReport& report, const std::filesystem::path& path);

/// Simulates (through the cache) dose-reduced scans of the contrast phantom
/// and the water cylinder, applies the denoiser everywhere, and measures:
/// MTF and HU accuracy per insert on the mean of the denoised contrast
/// realizations, NPS on the denoised water ensemble. Deterministic for a
/// given (denoiser, cfg).
BenchReport run_bench_suite(const Denoiser& denoiser, const BenchSuiteConfig& cfg,
                            SimulationCache* cache = nullptr);

/// Subscore weights and the HU error scale; recorded in reports.
struct CompositeWeights {
    double resolution = 1.0;
    double texture = 1.0;
    double hu = 1.0;
    double hu_scale = 25.0; ///< plateau MAD (HU) at which the HU subscore hits 0.
};

struct BenchScore {
    double resolution = 0.0; ///< mean over contrasts of min(1, mtf50/baseline mtf50).
    double texture = 0.0;    ///< 1 - L2 distance of unit-area radial NPS curves, floored at 0.
    double hu = 0.0;         ///< max(0, 1 - mean plateau MAD / hu_scale).
    double composite = 0.0;  ///< weighted mean of the three, 0 if psnr < ldct floor.
};

/// Scores a report against the FBP baseline report. model_psnr below
/// ldct_psnr zeroes the composite (the tuning-set floor); pass -inf to
/// disable the floor.
BenchScore compose_bench_score(const BenchReport& model, const BenchReport& baseline,
                               double model_psnr, double ldct_psnr,
                               const CompositeWeights& weights = {});

// ---- greedy tuning -------------------------------------------------------

enum class ObjectiveKind { global, bench };

std::string to_string(ObjectiveKind kind);
ObjectiveKind objective_kind_from_string(const std::string& s);

struct CandidateScore {
    double psnr = 0.0;
    double ssim = 0.0;
    double composite = 0.0; ///< bench paradigm only, as are the subscores:
    double resolution = 0.0, texture = 0.0, hu = 0.0;
    bool failed = false;
    std::string error;
};

/// global: higher PSNR wins, ties within 0.01 dB broken by SSIM.
/// bench: higher composite wins.
bool candidate_better(const CandidateScore& a, const CandidateScore& b, ObjectiveKind kind);

/// Evaluates one candidate configuration end to end (train + score).
using ObjectiveFn = std::function<CandidateScore(const TrainSetup&)>;

struct StageRow {
    std::string stage;
    std::string label;
    CandidateScore score;
    bool winner = false;
};

struct TuneResult {
    TrainSetup winner;
    std::vector<StageRow> table;
};

/// Stage-wise greedy search: all candidates of stage k are scored with the
/// stage <k winners applied, and only the best is forwarded. Failed
/// candidates stay in the table but cannot win; a stage with no surviving
/// candidate raises DataError.
TuneResult greedy_tune(const std::vector<ExperimentStage>& stages, const TrainSetup& base,
                       ObjectiveKind kind, const ObjectiveFn& objective);

void write_tune_table_csv(const TuneResult& result, const std::filesystem::path& path);

/// Low-dose / normal-dose image pairs in HU; train_pairs feed patching,
/// tuning_set is the held-out scoring set.
struct TuningData {
    std::vector<std::pair<Image, Image>> train_pairs;
    std::vector<std::pair<Image, Image>> tuning_set;
};

/// Trains a CNN3 per the setup and scores mean PSNR/SSIM on the tuning set.
ObjectiveFn make_global_objective(const TuningData& data);

/// Trains, runs the bench suite on the model, and scores the composite
/// against an FBP baseline computed once; the PSNR floor is the tuning-set
/// PSNR of the raw low-dose inputs.
ObjectiveFn make_bench_objective(const TuningData& data, const BenchSuiteConfig& suite,
                                 SimulationCache* cache = nullptr,
                                 const CompositeWeights& weights = {});

/// Trains a model from HU pairs per the setup (patching included) and returns
/// the model with its normalization metadata; shared by objectives and CLI.
Cnn3Model train_from_pairs(const std::vector<std::pair<Image, Image>>& pairs,
                           const TrainSetup& setup,
                           const std::function<void(int, double)>& on_epoch = {});

} // namespace ctbench
