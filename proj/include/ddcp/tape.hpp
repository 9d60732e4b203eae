#pragma once

#include <cstdint>
#include <vector>

#include "ddcp/tensor.hpp"

namespace ddcp {

// Handle to a node on a Tape.
struct Value {
    std::int32_t id = -1;
};

// Reverse-mode differentiation tape.
//
// Every forward primitive appends one node, so the tape is an append-only DAG
// whose reverse index order is a reverse topological order. backward() seeds
// the scalar root with 1, visits each node exactly once, accumulates leaf
// gradients into their external sinks, and clears the tape.
//
// A tape is single-threaded; independent tapes may run concurrently.
class Tape {
public:
    // Leaf whose gradient accumulates into *grad_sink (shape must match).
    Value leaf(const Tensor& t, Tensor* grad_sink);
    // Leaf with no gradient (inputs, noise draws, targets).
    Value constant(Tensor t);

    // matrix*matrix or matrix*vector
    Value matmul(Value a, Value b);
    // same shape, or b a vector broadcast over the rows of matrix a
    Value add(Value a, Value b);
    Value sub(Value a, Value b);
    // elementwise; either side may be a 1-element scalar broadcast
    Value mul(Value a, Value b);
    Value div(Value a, Value b);
    Value scale(Value a, double k);
    Value tanh(Value a);
    Value softplus(Value a);
    Value exp(Value a);
    Value log(Value a);
    // pass-through gradient strictly inside (lo, hi), zero outside
    Value clamp(Value a, double lo, double hi);
    // vectors only, along their single axis
    Value concat(Value a, Value b);
    Value dot(Value a, Value b);
    Value sum(Value a);
    Value sum_squares(Value a);

    const Tensor& value(Value v) const { return nodes_[check(v)].val; }

    // Gradient of the scalar root with respect to every leaf; clears the tape.
    void backward(Value root);

    // Gradient of a node after backward() was called with keep_grads.
    void backward_keep(Value root);
    const Tensor& grad(Value v) const;

    void clear();
    std::size_t node_count() const { return nodes_.size(); }

private:
    enum class Op : std::uint8_t {
        Leaf, Constant, MatMul, Add, AddBroadcast, Sub, Mul, MulScalarL,
        MulScalarR, Div, DivScalarR, Scale, Tanh, Softplus, Exp, Log, Clamp,
        Concat, Dot, Sum, SumSquares,
    };

    struct Node {
        Op op;
        std::int32_t a = -1;
        std::int32_t b = -1;
        double k0 = 0.0;
        double k1 = 0.0;
        Tensor val;
        Tensor* sink = nullptr;
    };

    std::int32_t check(Value v) const;
    Value push(Node n);
    void run_backward(Value root);

    std::vector<Node> nodes_;
    std::vector<Tensor> grads_;
};

}  // namespace ddcp
