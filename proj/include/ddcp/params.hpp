#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "ddcp/rng.hpp"
#include "ddcp/tensor.hpp"

namespace ddcp {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Named trainable tensor with Adam state.
struct Param {
    std::string name;
    Tensor value;
    Tensor grad;
    Tensor m;  // first moment
    Tensor v;  // second moment
    std::int64_t step = 0;
};

// Ordered collection of parameters; registration order is the checkpoint
// block order, so it must be deterministic.
class ParameterSet {
public:
    Param& add(const std::string& name, Tensor init);

    Param& at(const std::string& name);
    const Param& at(const std::string& name) const;
    bool contains(const std::string& name) const { return index_.count(name) != 0; }

    std::size_t count() const { return params_.size(); }
    Param& operator[](std::size_t i) { return params_[i]; }
    const Param& operator[](std::size_t i) const { return params_[i]; }

    std::size_t scalar_count() const;
    void zero_grads();

    // One Adam update from the accumulated gradients; throws NumericError on
    // a non-finite gradient. Bias-corrected, per-parameter step counts.
    void adam_step(const AdamConfig& cfg);

private:
    std::vector<Param> params_;
    std::unordered_map<std::string, std::size_t> index_;
};

// Zero-mean uniform init with scale 1/sqrt(fan_in), seeded.
Tensor uniform_init(std::size_t rows, std::size_t cols, CounterRng stream);

}  // namespace ddcp
