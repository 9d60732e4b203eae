#pragma once

#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <string>
#include <vector>

#include "ddcp/errors.hpp"

namespace ddcp {

// Dense row-major tensor of doubles, rank 1 or 2. Activations are rank-1
// vectors, weights are rank-2 matrices; scalars are 1-element vectors.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> v;

    Tensor() = default;

    static Tensor vector(std::size_t n, double fill = 0.0) {
        Tensor t;
        t.shape = {n};
        t.v.assign(n, fill);
        return t;
    }

    static Tensor matrix(std::size_t rows, std::size_t cols, double fill = 0.0) {
        Tensor t;
        t.shape = {rows, cols};
        t.v.assign(rows * cols, fill);
        return t;
    }

    static Tensor scalar(double x) {
        Tensor t = vector(1);
        t.v[0] = x;
        return t;
    }

    static Tensor from(std::initializer_list<double> xs) {
        Tensor t;
        t.shape = {xs.size()};
        t.v.assign(xs);
        return t;
    }

    static Tensor identity(std::size_t n) {
        Tensor t = matrix(n, n);
        for (std::size_t i = 0; i < n; ++i) t.v[i * n + i] = 1.0;
        return t;
    }

    std::size_t rank() const { return shape.size(); }
    std::size_t size() const { return v.size(); }
    std::size_t rows() const { return rank() == 2 ? shape[0] : 1; }
    std::size_t cols() const { return rank() == 2 ? shape[1] : shape[0]; }

    double& operator()(std::size_t i) { return v[i]; }
    double operator()(std::size_t i) const { return v[i]; }
    double& operator()(std::size_t r, std::size_t c) { return v[r * shape[1] + c]; }
    double operator()(std::size_t r, std::size_t c) const { return v[r * shape[1] + c]; }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    std::string shape_str() const {
        std::string s = "(";
        for (std::size_t i = 0; i < shape.size(); ++i)
            s += (i ? "x" : "") + std::to_string(shape[i]);
        return s + ")";
    }
};

}  // namespace ddcp
