#include "ddcp/evaluate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <thread>

#include "ddcp/errors.hpp"

namespace ddcp {

using nlohmann::json;

double nmse(std::span<const double> h, std::span<const double> h_hat) {
    if (h.size() != h_hat.size()) throw ShapeError("nmse: length mismatch");
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) {
        const double d = h[i] - h_hat[i];
        num += d * d;
        den += h[i] * h[i];
    }
    if (den == 0.0) throw DegenerateInput("nmse: zero-norm target");
    return num / den;
}

std::vector<double> ZeroPredictor::predict(const DatasetSample&, const GridConfig& grid, int,
                                           std::size_t) const {
    return predict_zero(grid.feature_dim());
}

std::vector<double> StalePredictor::predict(const DatasetSample& s, const GridConfig& grid, int,
                                            std::size_t) const {
    return predict_stale(flatten_channel(s.frames.frames.at(0), grid));
}

std::vector<double> Ar1Predictor::predict(const DatasetSample& s, const GridConfig& grid,
                                          int delta, std::size_t) const {
    return predict_ar1(flatten_channel(s.frames.frames.at(0), grid), delta, s.frames.doppler_hz,
                       s.frames.frame_duration_s(grid));
}

std::vector<double> CvaePredictor::predict(const DatasetSample& s, const GridConfig& grid,
                                           int delta, std::size_t sample_index) const {
    (void)grid;
    const std::vector<double> cond = build_conditioning(s, model_.config().mode, delta);
    CounterRng rng = CounterRng(seed_).derive(stream_salt::kPredict).derive(sample_index);
    return model_.predict(cond, n_samples_, rng).mean;
}

std::vector<double> RecurrentEvalPredictor::predict(const DatasetSample& s, const GridConfig& grid,
                                                    int delta, std::size_t) const {
    std::vector<double> e = s.e;
    e[4] = delta / 10.0;
    std::vector<std::vector<double>> history;
    history.reserve(static_cast<std::size_t>(model_.config().unroll));
    for (int f = 0; f < model_.config().unroll; ++f)
        history.push_back(flatten_channel(s.frames.frames.at(static_cast<std::size_t>(f)), grid));
    return model_.predict(history, e);
}

namespace {

void parallel_samples(std::size_t count, int threads, const std::function<void(std::size_t)>& body) {
    const int workers = std::max(1, threads);
    if (workers == 1 || count < 2) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) body(i);
        });
    for (auto& t : pool) t.join();
}

}  // namespace

EvalRow evaluate(const Predictor& pred, const Dataset& test, const EvalOptions& opt) {
    if (test.count() == 0) throw UsageError("evaluate: empty test set");
    if (opt.delta < 0) throw UsageError("evaluate: delta must be non-negative");
    const std::size_t target = pred.anchor() + static_cast<std::size_t>(opt.delta);
    if (target >= test.grid.f)
        throw UsageError("evaluate: horizon beyond stored frames (target frame " +
                         std::to_string(target) + ", F = " + std::to_string(test.grid.f) + ")");

    std::vector<double> scores(test.count(), 0.0);
    std::vector<char> ok(test.count(), 0);
    parallel_samples(test.count(), opt.threads, [&](std::size_t i) {
        const DatasetSample& s = test.samples[i];
        const std::vector<double> h = flatten_channel(s.frames.frames.at(target), test.grid);
        const std::vector<double> h_hat = pred.predict(s, test.grid, opt.delta, i);
        try {
            scores[i] = nmse(h, h_hat);
            ok[i] = 1;
        } catch (const DegenerateInput&) {
            ok[i] = 0;
        }
    });

    // Sequential reduction over the stored per-sample scores keeps the result
    // independent of worker scheduling.
    EvalRow row;
    row.predictor = pred.name();
    row.seed = opt.seed;
    double sum = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i)
        if (ok[i]) {
            sum += scores[i];
            ++row.n;
        } else {
            ++row.excluded;
        }
    if (row.n == 0) throw DegenerateInput("evaluate: every sample was degenerate");
    row.nmse_mean = sum / static_cast<double>(row.n);
    if (row.n > 1) {
        double ss = 0.0;
        for (std::size_t i = 0; i < scores.size(); ++i)
            if (ok[i]) {
                const double d = scores[i] - row.nmse_mean;
                ss += d * d;
            }
        row.nmse_stderr = std::sqrt(ss / static_cast<double>(row.n - 1)) /
                          std::sqrt(static_cast<double>(row.n));
    }
    return row;
}

ScenarioRanges force_doppler(const ScenarioRanges& base, double doppler_hz) {
    // Prefer the 28 GHz carrier (widest reachable f_D span); fall back to
    // 2.6 GHz for low Doppler points.
    for (double carrier : {28e9, 2.6e9, 3.5e9}) {
        const double speed = doppler_hz * kSpeedOfLight / carrier;
        if (speed >= 1.0 && speed <= 60.0) {
            ScenarioRanges r = base;
            r.speed_mps = {speed, speed};
            r.carrier_hz = {carrier};
            return r;
        }
    }
    throw UsageError("force_doppler: " + std::to_string(doppler_hz) +
                     " Hz is not reachable with speed in [1,60] m/s");
}

namespace {

std::size_t max_anchor(const std::vector<const Predictor*>& preds) {
    std::size_t a = 0;
    for (const auto* p : preds) a = std::max(a, p->anchor());
    return a;
}

void sort_rows(std::vector<EvalRow>& rows) {
    std::stable_sort(rows.begin(), rows.end(), [](const EvalRow& a, const EvalRow& b) {
        if (a.axis != b.axis) return a.axis < b.axis;
        return a.predictor < b.predictor;
    });
}

json rows_meta(const std::vector<EvalRow>& rows) {
    json out = json::array();
    for (const auto& r : rows)
        out.push_back({{"axis", r.axis}, {"predictor", r.predictor}, {"excluded", r.excluded}});
    return out;
}

}  // namespace

EvalReport sweep_doppler(const SweepConfig& cfg, const std::vector<const Predictor*>& preds) {
    if (cfg.doppler_points_hz.empty()) throw UsageError("sweep: no doppler points");
    if (preds.empty()) throw UsageError("sweep: no predictors");

    GridConfig grid = cfg.grid;
    grid.f = std::max(grid.f, max_anchor(preds) + static_cast<std::size_t>(cfg.delta) + 1);

    EvalReport report;
    report.sweep_axis = "doppler_hz";
    json datasets = json::array();
    for (std::size_t pt = 0; pt < cfg.doppler_points_hz.size(); ++pt) {
        const double fd = cfg.doppler_points_hz[pt];
        GenOptions gen = cfg.gen;
        gen.ranges = force_doppler(cfg.gen.ranges, fd);
        gen.ranges.horizon = {cfg.delta, cfg.delta};
        gen.threads = cfg.threads;
        const std::uint64_t ds_seed = CounterRng(cfg.seed).derive(pt).next_u64();
        Dataset ds = build_dataset(grid, cfg.eval_count, ds_seed, gen);
        datasets.push_back({{"axis", fd}, {"seed", ds_seed}, {"count", cfg.eval_count}});

        EvalOptions opt;
        opt.delta = cfg.delta;
        opt.threads = cfg.threads;
        opt.seed = cfg.seed;
        for (const auto* p : preds) {
            EvalRow row = evaluate(*p, ds, opt);
            row.axis = fd;
            report.rows.push_back(std::move(row));
        }
    }
    sort_rows(report.rows);
    report.metadata = {{"sweep_axis", report.sweep_axis},
                      {"delta", cfg.delta},
                      {"grid", {{"m", grid.m}, {"n", grid.n}, {"l", grid.l}, {"f", grid.f}}},
                      {"seed", cfg.seed},
                      {"datasets", datasets},
                      {"rows", rows_meta(report.rows)}};
    return report;
}

EvalReport sweep_horizon(const SweepConfig& cfg, const std::vector<const Predictor*>& preds) {
    if (cfg.horizon_points.empty()) throw UsageError("sweep: no horizon points");
    if (preds.empty()) throw UsageError("sweep: no predictors");

    int max_delta = 0;
    for (int d : cfg.horizon_points) {
        if (d < 0) throw UsageError("sweep: negative horizon");
        max_delta = std::max(max_delta, d);
    }
    GridConfig grid = cfg.grid;
    grid.f = std::max(grid.f, max_anchor(preds) + static_cast<std::size_t>(max_delta) + 1);

    GenOptions gen = cfg.gen;
    gen.ranges = force_doppler(cfg.gen.ranges, cfg.fixed_doppler_hz);
    gen.ranges.horizon = {0, 0};
    gen.threads = cfg.threads;
    const std::uint64_t ds_seed = CounterRng(cfg.seed).derive(0).next_u64();
    Dataset ds = build_dataset(grid, cfg.eval_count, ds_seed, gen);

    EvalReport report;
    report.sweep_axis = "horizon_frames";
    for (int delta : cfg.horizon_points) {
        EvalOptions opt;
        opt.delta = delta;
        opt.threads = cfg.threads;
        opt.seed = cfg.seed;
        for (const auto* p : preds) {
            EvalRow row = evaluate(*p, ds, opt);
            row.axis = delta;
            report.rows.push_back(std::move(row));
        }
    }
    sort_rows(report.rows);
    report.metadata = {{"sweep_axis", report.sweep_axis},
                      {"fixed_doppler_hz", cfg.fixed_doppler_hz},
                      {"grid", {{"m", grid.m}, {"n", grid.n}, {"l", grid.l}, {"f", grid.f}}},
                      {"seed", cfg.seed},
                      {"datasets", json::array({{{"seed", ds_seed}, {"count", cfg.eval_count}}})},
                      {"rows", rows_meta(report.rows)}};
    return report;
}

namespace {
std::string fmt_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}
}  // namespace

void emit_report(const EvalReport& report, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw FormatError("cannot open for writing: " + path);
    os << "axis,predictor,nmse_mean,nmse_stderr,n,seed\n";
    for (const auto& r : report.rows)
        os << fmt_double(r.axis) << ',' << r.predictor << ',' << fmt_double(r.nmse_mean) << ','
           << fmt_double(r.nmse_stderr) << ',' << r.n << ',' << r.seed << '\n';
    os.flush();
    if (!os) throw FormatError("write failure: " + path);

    std::ofstream ms(path + ".meta.json", std::ios::binary);
    if (!ms) throw FormatError("cannot open for writing: " + path + ".meta.json");
    ms << report.metadata.dump(2) << '\n';
    ms.flush();
    if (!ms) throw FormatError("write failure: " + path + ".meta.json");
}

std::vector<EvalRow> parse_report_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw FormatError("cannot open: " + path);
    std::string line;
    if (!std::getline(is, line) || line != "axis,predictor,nmse_mean,nmse_stderr,n,seed")
        throw FormatError("bad report header: " + path);
    std::vector<EvalRow> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string field;
        EvalRow r;
        std::getline(ss, field, ',');
        r.axis = std::stod(field);
        std::getline(ss, r.predictor, ',');
        std::getline(ss, field, ',');
        r.nmse_mean = std::stod(field);
        std::getline(ss, field, ',');
        r.nmse_stderr = std::stod(field);
        std::getline(ss, field, ',');
        r.n = std::stoull(field);
        std::getline(ss, field, ',');
        r.seed = std::stoull(field);
        rows.push_back(std::move(r));
    }
    return rows;
}

std::uint64_t fnv1a64_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw FormatError("cannot open: " + path);
    std::uint64_t h = 1469598103934665603ULL;
    char buf[1 << 16];
    while (is) {
        is.read(buf, sizeof(buf));
        for (std::streamsize i = 0; i < is.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ULL;
        }
    }
    return h;
}

}  // namespace ddcp
