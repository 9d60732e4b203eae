#pragma once

#include <utility>
#include <vector>

#include "ddcp/rng.hpp"

namespace ddcp {

inline constexpr double kSpeedOfLight = 299792458.0;

// Normalizer for the Doppler entry of the conditioning vector (wire format
// constant; roughly the largest reachable f_D = 60 m/s at 28 GHz).
inline constexpr double kDopplerNorm = 5603.86;

// Maximum Doppler shift f_D = v * f_c / c.
double derive_doppler(double speed_mps, double carrier_hz);

// Raw physical parameters of one dataset sample.
struct ScenarioParams {
    double snr_db = 15.0;
    double speed_mps = 30.0;        // [1, 60]
    double carrier_hz = 3.5e9;      // {2.6e9, 3.5e9, 28e9}
    double bandwidth_hz = 20e6;     // [5e6, 40e6]
    double scs_hz = 30e3;           // {15e3, 30e3, 60e3}
    int cp_len = 16;                // {0, 16, 32}
    int n_tx = 1;                   // {1, 2, 4}
    int n_rx = 1;                   // {1, 2, 4}
    int horizon = 1;                // prediction horizon in frames, [0, 10]

    void validate() const;  // throws UsageError on any out-of-range field
};

// Sampling ranges for scenario draws; fields may be narrowed or pinned by
// configuration but must stay inside the ScenarioParams domain.
struct ScenarioRanges {
    std::pair<double, double> snr_db{0.0, 30.0};
    std::pair<double, double> speed_mps{1.0, 60.0};
    std::pair<double, double> bandwidth_hz{5e6, 40e6};
    std::vector<double> carrier_hz{2.6e9, 3.5e9, 28e9};
    std::vector<double> scs_hz{15e3, 30e3, 60e3};
    std::vector<int> cp_len{0, 16, 32};
    std::vector<int> n_tx{1, 2, 4};
    std::vector<int> n_rx{1, 2, 4};
    std::pair<int, int> horizon{0, 10};

    void validate() const;
};

// Uniform draw of every field from its range; categorical fields uniform
// over their choice sets. The draw order is fixed.
ScenarioParams sample_scenario(CounterRng& stream, const ScenarioRanges& ranges = {});

// 20-entry conditioning vector e.
//   dim0 snr/30; dim1 (speed-1)/59; dim2 (bw_MHz-5)/35; dim3 f_D/5603.86
//   (clamped to 1); dim4 horizon/10; dims5-7 carrier one-hot; dims8-10 SCS
//   one-hot; dims11-13 CP one-hot; dims14-16 n_tx one-hot; dims17-19 n_rx
//   one-hot. Every entry lies in [0,1].
std::vector<double> encode_conditioning(const ScenarioParams& p);

// Inverse of encode_conditioning; exact on the categorical groups, and on the
// continuous fields up to the precision of the stored entries.
ScenarioParams decode_conditioning(const std::vector<double>& e);

}  // namespace ddcp
