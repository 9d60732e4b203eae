#pragma once

#include <cstddef>

#include "ddcp/errors.hpp"

namespace ddcp {

// Delay-Doppler grid geometry plus dataset framing.
//   M delay bins x N Doppler/time bins per frame, L delay taps,
//   F frames per sample, E_dim conditioning entries.
struct GridConfig {
    std::size_t m = 32;
    std::size_t n = 32;
    std::size_t l = 6;
    std::size_t f = 11;
    std::size_t e_dim = 20;

    // complex channel vector length per frame
    std::size_t d() const { return m * n * l; }
    // real feature length per frame
    std::size_t feature_dim() const { return 2 * d(); }
    std::size_t bins() const { return m * n; }

    void validate() const {
        if (m < 1 || n < 1) throw UsageError("grid: M and N must be at least 1");
        if (l < 1 || l > m) throw UsageError("grid: L must satisfy 1 <= L <= M");
        if (f < 2) throw UsageError("grid: F must be at least 2");
        if (e_dim != 20) throw UsageError("grid: conditioning dimension is fixed at 20");
    }

    bool operator==(const GridConfig&) const = default;
};

}  // namespace ddcp
