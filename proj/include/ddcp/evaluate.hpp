#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ddcp/baseline.hpp"
#include "ddcp/cvae.hpp"
#include "ddcp/dataset.hpp"

namespace ddcp {

// ||h - h_hat||^2 / ||h||^2 on the real flattening (equals the complex-vector
// ratio exactly). Zero-norm targets are degenerate and excluded upstream.
double nmse(std::span<const double> h, std::span<const double> h_hat);

struct EvalRow {
    double axis = 0.0;
    std::string predictor;
    double nmse_mean = 0.0;
    double nmse_stderr = 0.0;
    std::size_t n = 0;
    std::size_t excluded = 0;  // degenerate zero-norm targets, sidecar only
    std::uint64_t seed = 0;
};

struct EvalReport {
    std::string sweep_axis = "none";  // doppler_hz | horizon_frames | none
    std::vector<EvalRow> rows;
    nlohmann::json metadata = nlohmann::json::object();
};

// A channel predictor under evaluation. The predicted frame for horizon
// delta is frames[anchor() + delta]; anchor() is the index of the last
// observed frame (0 for single-frame predictors).
class Predictor {
public:
    virtual ~Predictor() = default;
    virtual std::string name() const = 0;
    virtual std::size_t anchor() const { return 0; }
    virtual std::vector<double> predict(const DatasetSample& s, const GridConfig& grid, int delta,
                                        std::size_t sample_index) const = 0;
};

class ZeroPredictor final : public Predictor {
public:
    std::string name() const override { return "zero"; }
    std::vector<double> predict(const DatasetSample&, const GridConfig& grid, int,
                                std::size_t) const override;
};

class StalePredictor final : public Predictor {
public:
    std::string name() const override { return "stale"; }
    std::vector<double> predict(const DatasetSample& s, const GridConfig& grid, int,
                                std::size_t) const override;
};

class Ar1Predictor final : public Predictor {
public:
    std::string name() const override { return "ar1"; }
    std::vector<double> predict(const DatasetSample& s, const GridConfig& grid, int delta,
                                std::size_t) const override;
};

class CvaePredictor final : public Predictor {
public:
    CvaePredictor(const CvaeModel& model, int n_samples, std::uint64_t seed)
        : model_(model), n_samples_(n_samples), seed_(seed) {}
    std::string name() const override { return "cvae"; }
    std::vector<double> predict(const DatasetSample& s, const GridConfig& grid, int delta,
                                std::size_t sample_index) const override;

private:
    const CvaeModel& model_;
    int n_samples_;
    std::uint64_t seed_;
};

class RecurrentEvalPredictor final : public Predictor {
public:
    explicit RecurrentEvalPredictor(const RecurrentPredictor& model) : model_(model) {}
    std::string name() const override { return "simplified-recurrent"; }
    std::size_t anchor() const override {
        return static_cast<std::size_t>(model_.config().unroll) - 1;
    }
    std::vector<double> predict(const DatasetSample& s, const GridConfig& grid, int delta,
                                std::size_t sample_index) const override;

private:
    const RecurrentPredictor& model_;
};

struct EvalOptions {
    int delta = 1;
    int threads = 1;
    std::uint64_t seed = 0;  // recorded in the row
};

// Mean and standard error of per-sample NMSE between frames[anchor+delta]
// and the prediction. Parallel across samples, order-independent result.
EvalRow evaluate(const Predictor& pred, const Dataset& test, const EvalOptions& opt);

struct SweepConfig {
    std::vector<double> doppler_points_hz;  // doppler axis (delta fixed)
    int delta = 1;
    std::vector<int> horizon_points;        // horizon axis (doppler fixed)
    double fixed_doppler_hz = 2000.0;
    std::size_t eval_count = 200;
    std::uint64_t seed = 1;
    GridConfig grid;
    GenOptions gen;  // scenario ranges template; speed/carrier/horizon are forced per point
    int threads = 1;
};

// Fig.-style sweeps: NMSE versus maximum Doppler (datasets regenerated per
// axis point, fixed horizon) and NMSE versus prediction horizon (one dataset
// at fixed Doppler). Rows sorted by (axis, predictor).
EvalReport sweep_doppler(const SweepConfig& cfg, const std::vector<const Predictor*>& preds);
EvalReport sweep_horizon(const SweepConfig& cfg, const std::vector<const Predictor*>& preds);

// Scenario ranges that pin f_D by forcing the (speed, carrier) pair.
ScenarioRanges force_doppler(const ScenarioRanges& base, double doppler_hz);

// CSV "axis,predictor,nmse_mean,nmse_stderr,n,seed" plus a structured
// sidecar <path>.meta.json (grid, seeds, checksums, exclusion counts).
// Byte-identical re-emission for the same report.
void emit_report(const EvalReport& report, const std::string& path);

// Round-trip reader for report CSVs (used by tests and tooling).
std::vector<EvalRow> parse_report_csv(const std::string& path);

// FNV-1a of a file's bytes; recorded for model checksums in report sidecars.
std::uint64_t fnv1a64_file(const std::string& path);

}  // namespace ddcp
