#include "ddcp/tape.hpp"

#include <cmath>

namespace ddcp {

namespace {

void require(bool cond, const std::string& what) {
    if (!cond) throw ShapeError(what);
}

void check_finite(const Tensor& t, const char* op) {
    for (double x : t.v)
        if (!std::isfinite(x))
            throw NumericError(std::string("non-finite value produced by ") + op);
}

double softplus_stable(double x) {
    return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid(double x) {
    return x > 0 ? 1.0 / (1.0 + std::exp(-x)) : [](double e) { return e / (1.0 + e); }(std::exp(x));
}

}  // namespace

std::int32_t Tape::check(Value v) const {
    require(v.id >= 0 && static_cast<std::size_t>(v.id) < nodes_.size(), "tape: stale value handle");
    return v.id;
}

Value Tape::push(Node n) {
    nodes_.push_back(std::move(n));
    return Value{static_cast<std::int32_t>(nodes_.size() - 1)};
}

Value Tape::leaf(const Tensor& t, Tensor* grad_sink) {
    require(grad_sink == nullptr || grad_sink->shape == t.shape, "leaf: gradient sink shape mismatch");
    Node n;
    n.op = Op::Leaf;
    n.val = t;
    n.sink = grad_sink;
    return push(std::move(n));
}

Value Tape::constant(Tensor t) {
    Node n;
    n.op = Op::Constant;
    n.val = std::move(t);
    return push(std::move(n));
}

Value Tape::matmul(Value a, Value b) {
    const Tensor& A = value(a);
    const Tensor& B = value(b);
    require(A.rank() == 2, "matmul: left operand must be a matrix " + A.shape_str());
    require(A.shape[1] == (B.rank() == 2 ? B.shape[0] : B.shape[0]),
            "matmul: inner extents differ " + A.shape_str() + " vs " + B.shape_str());
    Node n;
    n.op = Op::MatMul;
    n.a = a.id;
    n.b = b.id;
    const std::size_t m = A.shape[0], k = A.shape[1];
    if (B.rank() == 1) {
        n.val = Tensor::vector(m);
        for (std::size_t r = 0; r < m; ++r) {
            double acc = 0.0;
            const double* arow = &A.v[r * k];
            for (std::size_t j = 0; j < k; ++j) acc += arow[j] * B.v[j];
            n.val.v[r] = acc;
        }
    } else {
        const std::size_t c = B.shape[1];
        n.val = Tensor::matrix(m, c);
        for (std::size_t r = 0; r < m; ++r)
            for (std::size_t j = 0; j < k; ++j) {
                const double av = A.v[r * k + j];
                const double* brow = &B.v[j * c];
                double* orow = &n.val.v[r * c];
                for (std::size_t q = 0; q < c; ++q) orow[q] += av * brow[q];
            }
    }
    check_finite(n.val, "matmul");
    return push(std::move(n));
}

Value Tape::add(Value a, Value b) {
    const Tensor& A = value(a);
    const Tensor& B = value(b);
    Node n;
    n.a = a.id;
    n.b = b.id;
    if (A.same_shape(B)) {
        n.op = Op::Add;
        n.val = A;
        for (std::size_t i = 0; i < B.size(); ++i) n.val.v[i] += B.v[i];
    } else {
        require(A.rank() == 2 && B.rank() == 1 && B.size() == A.shape[1],
                "add: shapes " + A.shape_str() + " vs " + B.shape_str());
        n.op = Op::AddBroadcast;
        n.val = A;
        for (std::size_t r = 0; r < A.shape[0]; ++r)
            for (std::size_t c = 0; c < A.shape[1]; ++c) n.val.v[r * A.shape[1] + c] += B.v[c];
    }
    check_finite(n.val, "add");
    return push(std::move(n));
}

Value Tape::sub(Value a, Value b) {
    const Tensor& A = value(a);
    const Tensor& B = value(b);
    require(A.same_shape(B), "sub: shapes " + A.shape_str() + " vs " + B.shape_str());
    Node n;
    n.op = Op::Sub;
    n.a = a.id;
    n.b = b.id;
    n.val = A;
    for (std::size_t i = 0; i < B.size(); ++i) n.val.v[i] -= B.v[i];
    check_finite(n.val, "sub");
    return push(std::move(n));
}

Value Tape::mul(Value a, Value b) {
    const Tensor& A = value(a);
    const Tensor& B = value(b);
    Node n;
    n.a = a.id;
    n.b = b.id;
    if (A.same_shape(B)) {
        n.op = Op::Mul;
        n.val = A;
        for (std::size_t i = 0; i < B.size(); ++i) n.val.v[i] *= B.v[i];
    } else if (A.size() == 1) {
        n.op = Op::MulScalarL;
        n.val = B;
        for (double& x : n.val.v) x *= A.v[0];
    } else if (B.size() == 1) {
        n.op = Op::MulScalarR;
        n.val = A;
        for (double& x : n.val.v) x *= B.v[0];
    } else {
        require(false, "mul: shapes " + A.shape_str() + " vs " + B.shape_str());
    }
    check_finite(n.val, "mul");
    return push(std::move(n));
}

Value Tape::div(Value a, Value b) {
    const Tensor& A = value(a);
    const Tensor& B = value(b);
    Node n;
    n.a = a.id;
    n.b = b.id;
    if (A.same_shape(B)) {
        n.op = Op::Div;
        n.val = A;
        for (std::size_t i = 0; i < B.size(); ++i) n.val.v[i] /= B.v[i];
    } else if (B.size() == 1) {
        n.op = Op::DivScalarR;
        n.val = A;
        for (double& x : n.val.v) x /= B.v[0];
    } else {
        require(false, "div: shapes " + A.shape_str() + " vs " + B.shape_str());
    }
    check_finite(n.val, "div");
    return push(std::move(n));
}

Value Tape::scale(Value a, double k) {
    Node n;
    n.op = Op::Scale;
    n.a = a.id;
    n.k0 = k;
    n.val = value(a);
    for (double& x : n.val.v) x *= k;
    check_finite(n.val, "scale");
    return push(std::move(n));
}

Value Tape::tanh(Value a) {
    Node n;
    n.op = Op::Tanh;
    n.a = a.id;
    n.val = value(a);
    for (double& x : n.val.v) x = std::tanh(x);
    return push(std::move(n));
}

Value Tape::softplus(Value a) {
    Node n;
    n.op = Op::Softplus;
    n.a = a.id;
    n.val = value(a);
    for (double& x : n.val.v) x = softplus_stable(x);
    check_finite(n.val, "softplus");
    return push(std::move(n));
}

Value Tape::exp(Value a) {
    Node n;
    n.op = Op::Exp;
    n.a = a.id;
    n.val = value(a);
    for (double& x : n.val.v) x = std::exp(x);
    check_finite(n.val, "exp");
    return push(std::move(n));
}

Value Tape::log(Value a) {
    Node n;
    n.op = Op::Log;
    n.a = a.id;
    n.val = value(a);
    for (double& x : n.val.v) x = std::log(x);
    check_finite(n.val, "log");
    return push(std::move(n));
}

Value Tape::clamp(Value a, double lo, double hi) {
    require(lo < hi, "clamp: lo must be below hi");
    Node n;
    n.op = Op::Clamp;
    n.a = a.id;
    n.k0 = lo;
    n.k1 = hi;
    n.val = value(a);
    for (double& x : n.val.v) x = x < lo ? lo : (x > hi ? hi : x);
    return push(std::move(n));
}

Value Tape::concat(Value a, Value b) {
    const Tensor& A = value(a);
    const Tensor& B = value(b);
    require(A.rank() == 1 && B.rank() == 1, "concat: vectors only");
    Node n;
    n.op = Op::Concat;
    n.a = a.id;
    n.b = b.id;
    n.val = Tensor::vector(A.size() + B.size());
    std::copy(A.v.begin(), A.v.end(), n.val.v.begin());
    std::copy(B.v.begin(), B.v.end(), n.val.v.begin() + static_cast<std::ptrdiff_t>(A.size()));
    return push(std::move(n));
}

Value Tape::dot(Value a, Value b) {
    const Tensor& A = value(a);
    const Tensor& B = value(b);
    require(A.rank() == 1 && B.rank() == 1 && A.size() == B.size(),
            "dot: vectors of equal length required");
    double acc = 0.0;
    for (std::size_t i = 0; i < A.size(); ++i) acc += A.v[i] * B.v[i];
    Node n;
    n.op = Op::Dot;
    n.a = a.id;
    n.b = b.id;
    n.val = Tensor::scalar(acc);
    check_finite(n.val, "dot");
    return push(std::move(n));
}

Value Tape::sum(Value a) {
    const Tensor& A = value(a);
    double acc = 0.0;
    for (double x : A.v) acc += x;
    Node n;
    n.op = Op::Sum;
    n.a = a.id;
    n.val = Tensor::scalar(acc);
    check_finite(n.val, "sum");
    return push(std::move(n));
}

Value Tape::sum_squares(Value a) {
    const Tensor& A = value(a);
    double acc = 0.0;
    for (double x : A.v) acc += x * x;
    Node n;
    n.op = Op::SumSquares;
    n.a = a.id;
    n.val = Tensor::scalar(acc);
    check_finite(n.val, "sum_squares");
    return push(std::move(n));
}

void Tape::run_backward(Value root) {
    const std::int32_t rid = check(root);
    require(nodes_[rid].val.size() == 1, "backward: root must be scalar");

    grads_.assign(nodes_.size(), Tensor{});
    grads_[rid] = Tensor::scalar(1.0);

    auto bump = [&](std::int32_t id) -> Tensor& {
        Tensor& g = grads_[id];
        if (g.v.empty()) {
            g = nodes_[id].val;
            std::fill(g.v.begin(), g.v.end(), 0.0);
        }
        return g;
    };

    for (std::int32_t id = rid; id >= 0; --id) {
        const Node& n = nodes_[id];
        const Tensor& g = grads_[id];
        if (g.v.empty()) continue;
        switch (n.op) {
        case Op::Leaf:
            if (n.sink)
                for (std::size_t i = 0; i < g.size(); ++i) n.sink->v[i] += g.v[i];
            break;
        case Op::Constant:
            break;
        case Op::MatMul: {
            const Tensor& A = nodes_[n.a].val;
            const Tensor& B = nodes_[n.b].val;
            Tensor& ga = bump(n.a);
            Tensor& gb = bump(n.b);
            const std::size_t m = A.shape[0], k = A.shape[1];
            if (B.rank() == 1) {
                // ga += g (x) B ; gb += A^T g
                for (std::size_t r = 0; r < m; ++r) {
                    const double gr = g.v[r];
                    if (gr == 0.0) continue;
                    double* garow = &ga.v[r * k];
                    const double* arow = &A.v[r * k];
                    for (std::size_t j = 0; j < k; ++j) {
                        garow[j] += gr * B.v[j];
                        gb.v[j] += gr * arow[j];
                    }
                }
            } else {
                const std::size_t c = B.shape[1];
                for (std::size_t r = 0; r < m; ++r)
                    for (std::size_t j = 0; j < k; ++j) {
                        const double* grow = &g.v[r * c];
                        const double* brow = &B.v[j * c];
                        double acc = 0.0;
                        for (std::size_t q = 0; q < c; ++q) acc += grow[q] * brow[q];
                        ga.v[r * k + j] += acc;
                    }
                for (std::size_t j = 0; j < k; ++j)
                    for (std::size_t r = 0; r < m; ++r) {
                        const double av = A.v[r * k + j];
                        if (av == 0.0) continue;
                        const double* grow = &g.v[r * c];
                        double* gbrow = &gb.v[j * c];
                        for (std::size_t q = 0; q < c; ++q) gbrow[q] += av * grow[q];
                    }
            }
            break;
        }
        case Op::Add: {
            Tensor& ga = bump(n.a);
            Tensor& gb = bump(n.b);
            for (std::size_t i = 0; i < g.size(); ++i) {
                ga.v[i] += g.v[i];
                gb.v[i] += g.v[i];
            }
            break;
        }
        case Op::AddBroadcast: {
            Tensor& ga = bump(n.a);
            Tensor& gb = bump(n.b);
            const std::size_t rows = nodes_[n.a].val.shape[0];
            const std::size_t cols = nodes_[n.a].val.shape[1];
            for (std::size_t r = 0; r < rows; ++r)
                for (std::size_t c = 0; c < cols; ++c) {
                    ga.v[r * cols + c] += g.v[r * cols + c];
                    gb.v[c] += g.v[r * cols + c];
                }
            break;
        }
        case Op::Sub: {
            Tensor& ga = bump(n.a);
            Tensor& gb = bump(n.b);
            for (std::size_t i = 0; i < g.size(); ++i) {
                ga.v[i] += g.v[i];
                gb.v[i] -= g.v[i];
            }
            break;
        }
        case Op::Mul: {
            const Tensor& A = nodes_[n.a].val;
            const Tensor& B = nodes_[n.b].val;
            Tensor& ga = bump(n.a);
            Tensor& gb = bump(n.b);
            for (std::size_t i = 0; i < g.size(); ++i) {
                ga.v[i] += g.v[i] * B.v[i];
                gb.v[i] += g.v[i] * A.v[i];
            }
            break;
        }
        case Op::MulScalarL: {
            const Tensor& B = nodes_[n.b].val;
            const double s = nodes_[n.a].val.v[0];
            Tensor& ga = bump(n.a);
            Tensor& gb = bump(n.b);
            for (std::size_t i = 0; i < g.size(); ++i) {
                ga.v[0] += g.v[i] * B.v[i];
                gb.v[i] += g.v[i] * s;
            }
            break;
        }
        case Op::MulScalarR: {
            const Tensor& A = nodes_[n.a].val;
            const double s = nodes_[n.b].val.v[0];
            Tensor& ga = bump(n.a);
            Tensor& gb = bump(n.b);
            for (std::size_t i = 0; i < g.size(); ++i) {
                ga.v[i] += g.v[i] * s;
                gb.v[0] += g.v[i] * A.v[i];
            }
            break;
        }
        case Op::Div: {
            const Tensor& A = nodes_[n.a].val;
            const Tensor& B = nodes_[n.b].val;
            Tensor& ga = bump(n.a);
            Tensor& gb = bump(n.b);
            for (std::size_t i = 0; i < g.size(); ++i) {
                ga.v[i] += g.v[i] / B.v[i];
                gb.v[i] -= g.v[i] * A.v[i] / (B.v[i] * B.v[i]);
            }
            break;
        }
        case Op::DivScalarR: {
            const Tensor& A = nodes_[n.a].val;
            const double s = nodes_[n.b].val.v[0];
            Tensor& ga = bump(n.a);
            Tensor& gb = bump(n.b);
            for (std::size_t i = 0; i < g.size(); ++i) {
                ga.v[i] += g.v[i] / s;
                gb.v[0] -= g.v[i] * A.v[i] / (s * s);
            }
            break;
        }
        case Op::Scale: {
            Tensor& ga = bump(n.a);
            for (std::size_t i = 0; i < g.size(); ++i) ga.v[i] += g.v[i] * n.k0;
            break;
        }
        case Op::Tanh: {
            Tensor& ga = bump(n.a);
            for (std::size_t i = 0; i < g.size(); ++i)
                ga.v[i] += g.v[i] * (1.0 - n.val.v[i] * n.val.v[i]);
            break;
        }
        case Op::Softplus: {
            const Tensor& A = nodes_[n.a].val;
            Tensor& ga = bump(n.a);
            for (std::size_t i = 0; i < g.size(); ++i) ga.v[i] += g.v[i] * sigmoid(A.v[i]);
            break;
        }
        case Op::Exp: {
            Tensor& ga = bump(n.a);
            for (std::size_t i = 0; i < g.size(); ++i) ga.v[i] += g.v[i] * n.val.v[i];
            break;
        }
        case Op::Log: {
            const Tensor& A = nodes_[n.a].val;
            Tensor& ga = bump(n.a);
            for (std::size_t i = 0; i < g.size(); ++i) ga.v[i] += g.v[i] / A.v[i];
            break;
        }
        case Op::Clamp: {
            const Tensor& A = nodes_[n.a].val;
            Tensor& ga = bump(n.a);
            for (std::size_t i = 0; i < g.size(); ++i)
                if (A.v[i] > n.k0 && A.v[i] < n.k1) ga.v[i] += g.v[i];
            break;
        }
        case Op::Concat: {
            Tensor& ga = bump(n.a);
            Tensor& gb = bump(n.b);
            const std::size_t na = ga.size();
            for (std::size_t i = 0; i < na; ++i) ga.v[i] += g.v[i];
            for (std::size_t i = 0; i < gb.size(); ++i) gb.v[i] += g.v[na + i];
            break;
        }
        case Op::Dot: {
            const Tensor& A = nodes_[n.a].val;
            const Tensor& B = nodes_[n.b].val;
            Tensor& ga = bump(n.a);
            Tensor& gb = bump(n.b);
            const double g0 = g.v[0];
            for (std::size_t i = 0; i < A.size(); ++i) {
                ga.v[i] += g0 * B.v[i];
                gb.v[i] += g0 * A.v[i];
            }
            break;
        }
        case Op::Sum: {
            Tensor& ga = bump(n.a);
            const double g0 = g.v[0];
            for (double& x : ga.v) x += g0;
            break;
        }
        case Op::SumSquares: {
            const Tensor& A = nodes_[n.a].val;
            Tensor& ga = bump(n.a);
            const double g0 = g.v[0];
            for (std::size_t i = 0; i < A.size(); ++i) ga.v[i] += 2.0 * g0 * A.v[i];
            break;
        }
        }
    }
}

void Tape::backward(Value root) {
    run_backward(root);
    clear();
}

void Tape::backward_keep(Value root) { run_backward(root); }

const Tensor& Tape::grad(Value v) const {
    const std::int32_t id = check(v);
    require(!grads_.empty() && !grads_[id].v.empty(), "grad: no gradient recorded for node");
    return grads_[id];
}

void Tape::clear() {
    nodes_.clear();
    grads_.clear();
}

}  // namespace ddcp
