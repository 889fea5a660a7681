#pragma once

#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "distreg/matrix.hpp"

namespace distreg::ad {

// Reverse-mode autodiff over dense matrices. A Var is a handle to a node in
// an acyclic computation graph. Each op records a backward rule; backward()
// walks the graph once in reverse topological order.
//
// Gradient semantics: node.grad() is an accumulator. Each backward() call
// computes the gradients of that call's root and adds them in, so calling
// backward twice (or on two scalar roots sharing leaves) accumulates, and
// multi-term objectives can be built either as one summed root or as several
// backward passes. The optimizer zeroes leaf grads after each step.
struct Node {
    Matrix value;
    Matrix grad;     // accumulated across backward calls
    Matrix scratch;  // per-pass gradient, internal to backward()
    std::vector<std::shared_ptr<Node>> parents;
    // Reads this->scratch, adds contributions into parents' scratch.
    std::function<void(Node&)> backprop;

    explicit Node(Matrix v)
        : value(std::move(v)),
          grad(value.rows(), value.cols()),
          scratch(value.rows(), value.cols()) {}
};

class Var {
public:
    Var() = default;
    explicit Var(Matrix value) : node_(std::make_shared<Node>(std::move(value))) {}
    explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}

    static Var scalar(double v) { return Var(Matrix(1, 1, v)); }
    static Var column(const std::vector<double>& v) { return Var(Matrix::from_column(v)); }

    bool valid() const { return node_ != nullptr; }
    const Matrix& value() const { return node_->value; }
    Matrix& value() { return node_->value; }
    const Matrix& grad() const { return node_->grad; }
    Matrix& grad() { return node_->grad; }
    double scalar_value() const {
        if (!node_->value.is_scalar())
            throw ContractError("scalar_value: node is " + node_->value.shape_str());
        return node_->value(0, 0);
    }
    void zero_grad() { node_->grad.fill(0.0); }

    std::size_t rows() const { return node_->value.rows(); }
    std::size_t cols() const { return node_->value.cols(); }

    std::shared_ptr<Node> node() const { return node_; }

private:
    std::shared_ptr<Node> node_;
};

// Populates grads of every node reachable from root. root must be 1x1.
void backward(const Var& root);

// --- structural ops ---

Var matmul(const Var& a, const Var& b);

Var add(const Var& a, const Var& b);  // same shape
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var div(const Var& a, const Var& b);

// Row-vector broadcasts: a is n x m, b is 1 x m.
Var add_rowvec(const Var& a, const Var& b);
Var sub_rowvec(const Var& a, const Var& b);
Var mul_rowvec(const Var& a, const Var& b);

// n x 1 -> n x k, repeating the single column.
Var broadcast_col(const Var& x, std::size_t k);

// --- elementwise unary ops ---

enum class UnaryOp { Abs, Square, Sqrt, Exp, Log, Gelu, Tanh, Elu, Relu, Negate };

Var unary(UnaryOp op, const Var& x);

inline Var abs(const Var& x) { return unary(UnaryOp::Abs, x); }
inline Var square(const Var& x) { return unary(UnaryOp::Square, x); }
inline Var sqrt(const Var& x) { return unary(UnaryOp::Sqrt, x); }
inline Var exp(const Var& x) { return unary(UnaryOp::Exp, x); }
inline Var log(const Var& x) { return unary(UnaryOp::Log, x); }
// GELU in the exact Gaussian-CDF form x * Phi(x), not the tanh approximation.
inline Var gelu(const Var& x) { return unary(UnaryOp::Gelu, x); }
inline Var tanh(const Var& x) { return unary(UnaryOp::Tanh, x); }
inline Var elu(const Var& x) { return unary(UnaryOp::Elu, x); }
inline Var relu(const Var& x) { return unary(UnaryOp::Relu, x); }
inline Var negate(const Var& x) { return unary(UnaryOp::Negate, x); }

// scale * x + shift, elementwise with scalar constants.
Var affine(const Var& x, double scale, double shift);

// --- reductions ---

Var sum_all(const Var& x);   // -> 1x1
Var mean_all(const Var& x);  // -> 1x1
Var col_mean(const Var& x);  // n x m -> 1 x m
// Max/min over all entries; gradient routes to the first extremal entry in
// row-major order, which makes the subgradient at ties deterministic.
Var reduce_max(const Var& x);  // -> 1x1
Var reduce_min(const Var& x);  // -> 1x1
// log(sum_j exp(x_ij)) per row, computed stably. n x k -> n x 1.
Var row_logsumexp(const Var& x);

// --- shape ops ---

Var slice_cols(const Var& x, std::size_t c0, std::size_t c1);  // columns [c0, c1)
Var concat_rows(const Var& a, const Var& b);                   // both single-column

struct SortResult {
    Var sorted;
    std::vector<std::size_t> perm;  // sorted[i] == x[perm[i]]
};

// Ascending stable sort of a single-column Var; ties keep original order.
// A fixed permutation is linear, so the backward scatter is exact away from
// ties and a deterministic subgradient at them.
SortResult sort_column(const Var& x);

// out[i] = x[i+1] - x[i] for a single-column Var; n x 1 -> (n-1) x 1.
Var adjacent_diff(const Var& x);

}  // namespace distreg::ad
