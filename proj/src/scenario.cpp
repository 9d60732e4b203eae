#include "ddcp/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>

#include "ddcp/errors.hpp"

namespace ddcp {

namespace {

constexpr double kCarriers[3] = {2.6e9, 3.5e9, 28e9};
constexpr double kScs[3] = {15e3, 30e3, 60e3};
constexpr int kCp[3] = {0, 16, 32};
constexpr int kAntennas[3] = {1, 2, 4};

int index_of(double x, const double (&set)[3], const char* field) {
    for (int i = 0; i < 3; ++i)
        if (x == set[i]) return i;
    throw UsageError(std::string(field) + " not in its allowed set");
}

int index_of(int x, const int (&set)[3], const char* field) {
    for (int i = 0; i < 3; ++i)
        if (x == set[i]) return i;
    throw UsageError(std::string(field) + " not in its allowed set");
}

void check_range(double x, double lo, double hi, const char* field) {
    if (!(x >= lo && x <= hi))
        throw UsageError(std::string(field) + " out of range [" + std::to_string(lo) + ", " +
                         std::to_string(hi) + "]: " + std::to_string(x));
}

}  // namespace

double derive_doppler(double speed_mps, double carrier_hz) {
    if (speed_mps < 0.0) throw UsageError("derive_doppler: speed must be non-negative");
    if (carrier_hz <= 0.0) throw UsageError("derive_doppler: carrier must be positive");
    return speed_mps * carrier_hz / kSpeedOfLight;
}

void ScenarioParams::validate() const {
    check_range(snr_db, 0.0, 30.0, "snr_db");
    check_range(speed_mps, 1.0, 60.0, "speed");
    check_range(bandwidth_hz, 5e6, 40e6, "bandwidth");
    index_of(carrier_hz, kCarriers, "carrier");
    index_of(scs_hz, kScs, "scs");
    index_of(cp_len, kCp, "cp_len");
    index_of(n_tx, kAntennas, "n_tx");
    index_of(n_rx, kAntennas, "n_rx");
    if (horizon < 0 || horizon > 10) throw UsageError("horizon out of range [0, 10]");
}

void ScenarioRanges::validate() const {
    auto sub_range = [](std::pair<double, double> r, double lo, double hi, const char* f) {
        if (!(r.first <= r.second && r.first >= lo && r.second <= hi))
            throw UsageError(std::string("scenario range for ") + f + " outside its domain");
    };
    sub_range(snr_db, 0.0, 30.0, "snr_db");
    sub_range(speed_mps, 1.0, 60.0, "speed");
    sub_range(bandwidth_hz, 5e6, 40e6, "bandwidth");
    auto subset_d = [](const std::vector<double>& xs, const double (&set)[3], const char* f) {
        if (xs.empty()) throw UsageError(std::string("empty choice set for ") + f);
        for (double x : xs) index_of(x, set, f);
    };
    auto subset_i = [](const std::vector<int>& xs, const int (&set)[3], const char* f) {
        if (xs.empty()) throw UsageError(std::string("empty choice set for ") + f);
        for (int x : xs) index_of(x, set, f);
    };
    subset_d(carrier_hz, kCarriers, "carrier");
    subset_d(scs_hz, kScs, "scs");
    subset_i(cp_len, kCp, "cp_len");
    subset_i(n_tx, kAntennas, "n_tx");
    subset_i(n_rx, kAntennas, "n_rx");
    if (!(horizon.first <= horizon.second && horizon.first >= 0 && horizon.second <= 10))
        throw UsageError("scenario range for horizon outside [0, 10]");
}

ScenarioParams sample_scenario(CounterRng& stream, const ScenarioRanges& r) {
    r.validate();
    ScenarioParams p;
    p.snr_db = stream.uniform(r.snr_db.first, r.snr_db.second);
    p.speed_mps = stream.uniform(r.speed_mps.first, r.speed_mps.second);
    p.carrier_hz = r.carrier_hz[stream.next_below(r.carrier_hz.size())];
    p.bandwidth_hz = stream.uniform(r.bandwidth_hz.first, r.bandwidth_hz.second);
    p.scs_hz = r.scs_hz[stream.next_below(r.scs_hz.size())];
    p.cp_len = r.cp_len[stream.next_below(r.cp_len.size())];
    p.n_tx = r.n_tx[stream.next_below(r.n_tx.size())];
    p.n_rx = r.n_rx[stream.next_below(r.n_rx.size())];
    p.horizon = r.horizon.first +
                static_cast<int>(stream.next_below(
                    static_cast<std::uint64_t>(r.horizon.second - r.horizon.first + 1)));
    return p;
}

std::vector<double> encode_conditioning(const ScenarioParams& p) {
    p.validate();
    std::vector<double> e(20, 0.0);
    e[0] = p.snr_db / 30.0;
    e[1] = (p.speed_mps - 1.0) / 59.0;
    e[2] = (p.bandwidth_hz / 1e6 - 5.0) / 35.0;
    e[3] = std::min(1.0, derive_doppler(p.speed_mps, p.carrier_hz) / kDopplerNorm);
    e[4] = p.horizon / 10.0;
    e[5 + index_of(p.carrier_hz, kCarriers, "carrier")] = 1.0;
    e[8 + index_of(p.scs_hz, kScs, "scs")] = 1.0;
    e[11 + index_of(p.cp_len, kCp, "cp_len")] = 1.0;
    e[14 + index_of(p.n_tx, kAntennas, "n_tx")] = 1.0;
    e[17 + index_of(p.n_rx, kAntennas, "n_rx")] = 1.0;
    return e;
}

ScenarioParams decode_conditioning(const std::vector<double>& e) {
    if (e.size() != 20) throw ShapeError("conditioning vector must have 20 entries");
    auto onehot = [&](std::size_t base, const char* field) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < 3; ++i)
            if (e[base + i] > e[base + best]) best = i;
        if (std::abs(e[base + best] - 1.0) > 1e-3)
            throw FormatError(std::string("conditioning one-hot group for ") + field +
                              " is not set");
        return best;
    };
    ScenarioParams p;
    p.snr_db = 30.0 * e[0];
    p.speed_mps = 1.0 + 59.0 * e[1];
    p.bandwidth_hz = (5.0 + 35.0 * e[2]) * 1e6;
    p.horizon = static_cast<int>(std::lround(10.0 * e[4]));
    p.carrier_hz = kCarriers[onehot(5, "carrier")];
    p.scs_hz = kScs[onehot(8, "scs")];
    p.cp_len = kCp[onehot(11, "cp_len")];
    p.n_tx = kAntennas[onehot(14, "n_tx")];
    p.n_rx = kAntennas[onehot(17, "n_rx")];
    return p;
}

}  // namespace ddcp
