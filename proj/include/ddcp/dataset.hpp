#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ddcp/channel.hpp"
#include "ddcp/grid.hpp"
#include "ddcp/scenario.hpp"

namespace ddcp {

struct DatasetSample {
    ScenarioParams params;
    std::vector<double> e;  // 20-entry conditioning vector
    ChannelFrameSequence frames;
};

// A conditioned channel dataset. Sample i is a pure function of
// (base_seed, i), so regeneration with the same seed is bit-identical and
// generation order (threading) cannot change the result.
struct Dataset {
    GridConfig grid;
    std::uint64_t base_seed = 0;
    std::vector<DatasetSample> samples;

    std::size_t count() const { return samples.size(); }
};

struct GenOptions {
    ScenarioRanges ranges;
    double pdp_decay = 1.5;
    int threads = 1;
};

DatasetSample generate_sample(const GridConfig& grid, std::uint64_t base_seed, std::size_t index,
                              const GenOptions& opt);

Dataset build_dataset(const GridConfig& grid, std::size_t count, std::uint64_t base_seed,
                      const GenOptions& opt = {});

// Deterministic permutation split into (train, test); disjoint and exhaustive.
std::pair<Dataset, Dataset> split_dataset(const Dataset& d, std::size_t train_count,
                                          std::uint64_t seed);

// DDCP file format, little-endian:
//   "DDCP" | u32 version=1 | u32 M,N,L,F,E_dim | u32 sample_count |
//   u64 base_seed | per sample: f32 e[E_dim], then F frames each as
//   f32[2*M*N*L] (real block then imaginary block, complex index l*M*N+i).
void save_ddcp(const Dataset& d, const std::string& path);
Dataset load_ddcp(const std::string& path);

// Structural pass over a written file plus bit-exact regeneration of the
// first and last samples. Throws FormatError on any mismatch.
void verify_ddcp(const std::string& path, const GenOptions& opt);

}  // namespace ddcp
