#include "ddcp/params.hpp"

#include <cmath>

#include "ddcp/errors.hpp"

namespace ddcp {

Param& ParameterSet::add(const std::string& name, Tensor init) {
    if (index_.count(name)) throw UsageError("duplicate parameter name: " + name);
    Param p;
    p.name = name;
    p.grad = init;
    std::fill(p.grad.v.begin(), p.grad.v.end(), 0.0);
    p.m = p.grad;
    p.v = p.grad;
    p.value = std::move(init);
    index_.emplace(name, params_.size());
    params_.push_back(std::move(p));
    return params_.back();
}

Param& ParameterSet::at(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw UsageError("unknown parameter: " + name);
    return params_[it->second];
}

const Param& ParameterSet::at(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw UsageError("unknown parameter: " + name);
    return params_[it->second];
}

std::size_t ParameterSet::scalar_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.value.size();
    return n;
}

void ParameterSet::zero_grads() {
    for (auto& p : params_) std::fill(p.grad.v.begin(), p.grad.v.end(), 0.0);
}

void ParameterSet::adam_step(const AdamConfig& cfg) {
    for (auto& p : params_)
        for (double g : p.grad.v)
            if (!std::isfinite(g)) throw NumericError("non-finite gradient for " + p.name);

    for (auto& p : params_) {
        p.step += 1;
        const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(p.step));
        const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(p.step));
        for (std::size_t i = 0; i < p.value.size(); ++i) {
            const double g = p.grad.v[i];
            p.m.v[i] = cfg.beta1 * p.m.v[i] + (1.0 - cfg.beta1) * g;
            p.v.v[i] = cfg.beta2 * p.v.v[i] + (1.0 - cfg.beta2) * g * g;
            const double mhat = p.m.v[i] / bc1;
            const double vhat = p.v.v[i] / bc2;
            p.value.v[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
        }
    }
}

Tensor uniform_init(std::size_t rows, std::size_t cols, CounterRng stream) {
    const double s = 1.0 / std::sqrt(static_cast<double>(cols));
    Tensor t = rows == 1 ? Tensor::vector(cols) : Tensor::matrix(rows, cols);
    for (double& x : t.v) x = stream.uniform(-s, s);
    return t;
}

}  // namespace ddcp
