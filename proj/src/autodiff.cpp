#include "distreg/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

namespace distreg::ad {

namespace {

std::shared_ptr<Node> make_node(Matrix value, std::vector<std::shared_ptr<Node>> parents,
                                std::function<void(Node&)> backprop) {
    auto n = std::make_shared<Node>(std::move(value));
    n->parents = std::move(parents);
    n->backprop = std::move(backprop);
    return n;
}

void require_same_shape(const Var& a, const Var& b, const char* op) {
    if (!a.value().same_shape(b.value()))
        throw ShapeError(std::string(op) + ": shapes " + a.value().shape_str() + " vs " +
                         b.value().shape_str());
}

void require_rowvec(const Var& a, const Var& b, const char* op) {
    if (b.rows() != 1 || b.cols() != a.cols())
        throw ShapeError(std::string(op) + ": expected 1x" + std::to_string(a.cols()) +
                         " row vector, got " + b.value().shape_str());
}

void require_column(const Var& x, const char* op) {
    if (x.cols() != 1)
        throw ShapeError(std::string(op) + ": expected single column, got " +
                         x.value().shape_str());
}

constexpr double kInvSqrt2 = 0.7071067811865475244;
constexpr double kInvSqrt2Pi = 0.3989422804014326779;

double gauss_cdf(double x) { return 0.5 * (1.0 + std::erf(x * kInvSqrt2)); }
double gauss_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

}  // namespace

void backward(const Var& root) {
    if (!root.value().is_scalar())
        throw ContractError("backward: root must be 1x1, got " + root.value().shape_str());

    // Iterative post-order DFS; each node is ordered after all its children in
    // `order`, so the reverse walk sees every node exactly once with its full
    // upstream gradient.
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    std::vector<std::shared_ptr<Node>> keep_alive;  // nodes owned only by parents lists
    struct Frame {
        Node* node;
        std::size_t next_parent;
    };
    std::vector<Frame> stack;
    stack.push_back({root.node().get(), 0});
    visited.insert(root.node().get());
    keep_alive.push_back(root.node());
    while (!stack.empty()) {
        Frame& f = stack.back();
        if (f.next_parent < f.node->parents.size()) {
            const auto& p = f.node->parents[f.next_parent++];
            if (visited.insert(p.get()).second) {
                keep_alive.push_back(p);
                stack.push_back({p.get(), 0});
            }
        } else {
            order.push_back(f.node);
            stack.pop_back();
        }
    }

    for (Node* n : order) n->scratch.fill(0.0);
    root.node()->scratch(0, 0) = 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backprop) n->backprop(*n);
    }
    // Fold the pass into the persistent accumulators.
    for (Node* n : order) {
        auto& g = n->grad.data();
        const auto& s = n->scratch.data();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += s[i];
    }
}

Var matmul(const Var& a, const Var& b) {
    if (a.cols() != b.rows())
        throw ShapeError("matmul: inner dimensions disagree, " + a.value().shape_str() + " * " +
                         b.value().shape_str());
    Matrix out = distreg::matmul(a.value(), b.value());
    auto an = a.node();
    auto bn = b.node();
    return Var(make_node(std::move(out), {an, bn}, [an, bn](Node& self) {
        // dA += G B^T ; dB += A^T G
        Matrix da = matmul_nt(self.scratch, bn->value);
        Matrix db = matmul_tn(an->value, self.scratch);
        for (std::size_t i = 0; i < da.size(); ++i) an->scratch[i] += da[i];
        for (std::size_t i = 0; i < db.size(); ++i) bn->scratch[i] += db[i];
    }));
}

namespace {

enum class BinOp { Add, Sub, Mul, Div };

Var binary(BinOp op, const Var& a, const Var& b, const char* name) {
    require_same_shape(a, b, name);
    Matrix out(a.rows(), a.cols());
    const auto& av = a.value().data();
    const auto& bv = b.value().data();
    for (std::size_t i = 0; i < out.size(); ++i) {
        switch (op) {
            case BinOp::Add: out[i] = av[i] + bv[i]; break;
            case BinOp::Sub: out[i] = av[i] - bv[i]; break;
            case BinOp::Mul: out[i] = av[i] * bv[i]; break;
            case BinOp::Div: out[i] = av[i] / bv[i]; break;
        }
    }
    auto an = a.node();
    auto bn = b.node();
    return Var(make_node(std::move(out), {an, bn}, [op, an, bn](Node& self) {
        const auto& g = self.scratch.data();
        const auto& av = an->value.data();
        const auto& bv = bn->value.data();
        auto& ga = an->scratch.data();
        auto& gb = bn->scratch.data();
        for (std::size_t i = 0; i < g.size(); ++i) {
            switch (op) {
                case BinOp::Add:
                    ga[i] += g[i];
                    gb[i] += g[i];
                    break;
                case BinOp::Sub:
                    ga[i] += g[i];
                    gb[i] -= g[i];
                    break;
                case BinOp::Mul:
                    ga[i] += g[i] * bv[i];
                    gb[i] += g[i] * av[i];
                    break;
                case BinOp::Div:
                    ga[i] += g[i] / bv[i];
                    gb[i] -= g[i] * av[i] / (bv[i] * bv[i]);
                    break;
            }
        }
    }));
}

}  // namespace

Var add(const Var& a, const Var& b) { return binary(BinOp::Add, a, b, "add"); }
Var sub(const Var& a, const Var& b) { return binary(BinOp::Sub, a, b, "sub"); }
Var mul(const Var& a, const Var& b) { return binary(BinOp::Mul, a, b, "mul"); }
Var div(const Var& a, const Var& b) { return binary(BinOp::Div, a, b, "div"); }

namespace {

enum class RowOp { Add, Sub, Mul };

Var rowvec_op(RowOp op, const Var& a, const Var& b, const char* name) {
    require_rowvec(a, b, name);
    const std::size_t n = a.rows(), m = a.cols();
    Matrix out(n, m);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            switch (op) {
                case RowOp::Add: out(i, j) = a.value()(i, j) + b.value()(0, j); break;
                case RowOp::Sub: out(i, j) = a.value()(i, j) - b.value()(0, j); break;
                case RowOp::Mul: out(i, j) = a.value()(i, j) * b.value()(0, j); break;
            }
        }
    auto an = a.node();
    auto bn = b.node();
    return Var(make_node(std::move(out), {an, bn}, [op, an, bn, n, m](Node& self) {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < m; ++j) {
                const double g = self.scratch(i, j);
                switch (op) {
                    case RowOp::Add:
                        an->scratch(i, j) += g;
                        bn->scratch(0, j) += g;
                        break;
                    case RowOp::Sub:
                        an->scratch(i, j) += g;
                        bn->scratch(0, j) -= g;
                        break;
                    case RowOp::Mul:
                        an->scratch(i, j) += g * bn->value(0, j);
                        bn->scratch(0, j) += g * an->value(i, j);
                        break;
                }
            }
    }));
}

}  // namespace

Var add_rowvec(const Var& a, const Var& b) { return rowvec_op(RowOp::Add, a, b, "add_rowvec"); }
Var sub_rowvec(const Var& a, const Var& b) { return rowvec_op(RowOp::Sub, a, b, "sub_rowvec"); }
Var mul_rowvec(const Var& a, const Var& b) { return rowvec_op(RowOp::Mul, a, b, "mul_rowvec"); }

Var broadcast_col(const Var& x, std::size_t k) {
    require_column(x, "broadcast_col");
    const std::size_t n = x.rows();
    Matrix out(n, k);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < k; ++j) out(i, j) = x.value()(i, 0);
    auto xn = x.node();
    return Var(make_node(std::move(out), {xn}, [xn, n, k](Node& self) {
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < k; ++j) s += self.scratch(i, j);
            xn->scratch(i, 0) += s;
        }
    }));
}

Var unary(UnaryOp op, const Var& x) {
    Matrix out(x.rows(), x.cols());
    const auto& xv = x.value().data();
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double v = xv[i];
        switch (op) {
            case UnaryOp::Abs: out[i] = std::fabs(v); break;
            case UnaryOp::Square: out[i] = v * v; break;
            case UnaryOp::Sqrt:
                if (v < 0.0) throw DomainError("sqrt of negative value");
                out[i] = std::sqrt(v);
                break;
            case UnaryOp::Exp: out[i] = std::exp(v); break;
            case UnaryOp::Log:
                if (v <= 0.0) throw DomainError("log of non-positive value");
                out[i] = std::log(v);
                break;
            case UnaryOp::Gelu: out[i] = v * gauss_cdf(v); break;
            case UnaryOp::Tanh: out[i] = std::tanh(v); break;
            case UnaryOp::Elu: out[i] = v >= 0.0 ? v : std::expm1(v); break;
            case UnaryOp::Relu: out[i] = v > 0.0 ? v : 0.0; break;
            case UnaryOp::Negate: out[i] = -v; break;
        }
    }
    auto xn = x.node();
    return Var(make_node(std::move(out), {xn}, [op, xn](Node& self) {
        const auto& g = self.scratch.data();
        const auto& xv = xn->value.data();
        const auto& ov = self.value.data();
        auto& gx = xn->scratch.data();
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double v = xv[i];
            double d = 0.0;
            switch (op) {
                case UnaryOp::Abs: d = v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); break;
                case UnaryOp::Square: d = 2.0 * v; break;
                case UnaryOp::Sqrt: d = ov[i] > 0.0 ? 0.5 / ov[i] : 0.0; break;
                case UnaryOp::Exp: d = ov[i]; break;
                case UnaryOp::Log: d = 1.0 / v; break;
                case UnaryOp::Gelu: d = gauss_cdf(v) + v * gauss_pdf(v); break;
                case UnaryOp::Tanh: d = 1.0 - ov[i] * ov[i]; break;
                case UnaryOp::Elu: d = v >= 0.0 ? 1.0 : ov[i] + 1.0; break;
                case UnaryOp::Relu: d = v > 0.0 ? 1.0 : 0.0; break;
                case UnaryOp::Negate: d = -1.0; break;
            }
            gx[i] += g[i] * d;
        }
    }));
}

Var affine(const Var& x, double scale, double shift) {
    Matrix out(x.rows(), x.cols());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = scale * x.value()[i] + shift;
    auto xn = x.node();
    return Var(make_node(std::move(out), {xn}, [xn, scale](Node& self) {
        for (std::size_t i = 0; i < self.scratch.size(); ++i)
            xn->scratch[i] += scale * self.scratch[i];
    }));
}

Var sum_all(const Var& x) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.value().size(); ++i) s += x.value()[i];
    auto xn = x.node();
    return Var(make_node(Matrix(1, 1, s), {xn}, [xn](Node& self) {
        const double g = self.scratch(0, 0);
        for (std::size_t i = 0; i < xn->scratch.size(); ++i) xn->scratch[i] += g;
    }));
}

Var mean_all(const Var& x) {
    if (x.value().size() == 0) throw ContractError("mean_all: empty matrix");
    const double inv = 1.0 / static_cast<double>(x.value().size());
    double s = 0.0;
    for (std::size_t i = 0; i < x.value().size(); ++i) s += x.value()[i];
    auto xn = x.node();
    return Var(make_node(Matrix(1, 1, s * inv), {xn}, [xn, inv](Node& self) {
        const double g = self.scratch(0, 0) * inv;
        for (std::size_t i = 0; i < xn->scratch.size(); ++i) xn->scratch[i] += g;
    }));
}

Var col_mean(const Var& x) {
    const std::size_t n = x.rows(), m = x.cols();
    if (n == 0) throw ContractError("col_mean: empty matrix");
    Matrix out(1, m);
    for (std::size_t j = 0; j < m; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += x.value()(i, j);
        out(0, j) = s / static_cast<double>(n);
    }
    auto xn = x.node();
    return Var(make_node(std::move(out), {xn}, [xn, n, m](Node& self) {
        const double inv = 1.0 / static_cast<double>(n);
        for (std::size_t j = 0; j < m; ++j) {
            const double g = self.scratch(0, j) * inv;
            for (std::size_t i = 0; i < n; ++i) xn->scratch(i, j) += g;
        }
    }));
}

namespace {

Var reduce_extreme(const Var& x, bool take_max) {
    if (x.value().size() == 0) throw ContractError("reduce: empty matrix");
    std::size_t best = 0;
    for (std::size_t i = 1; i < x.value().size(); ++i) {
        const bool better = take_max ? x.value()[i] > x.value()[best] : x.value()[i] < x.value()[best];
        if (better) best = i;  // strict comparison keeps the first extremal entry
    }
    auto xn = x.node();
    return Var(make_node(Matrix(1, 1, x.value()[best]), {xn}, [xn, best](Node& self) {
        xn->scratch[best] += self.scratch(0, 0);
    }));
}

}  // namespace

Var reduce_max(const Var& x) { return reduce_extreme(x, true); }
Var reduce_min(const Var& x) { return reduce_extreme(x, false); }

Var row_logsumexp(const Var& x) {
    const std::size_t n = x.rows(), k = x.cols();
    Matrix out(n, 1);
    for (std::size_t i = 0; i < n; ++i) {
        double mx = x.value()(i, 0);
        for (std::size_t j = 1; j < k; ++j) mx = std::max(mx, x.value()(i, j));
        double s = 0.0;
        for (std::size_t j = 0; j < k; ++j) s += std::exp(x.value()(i, j) - mx);
        out(i, 0) = mx + std::log(s);
    }
    auto xn = x.node();
    return Var(make_node(std::move(out), {xn}, [xn, n, k](Node& self) {
        // d/dx_ij = softmax(x_i)_j
        for (std::size_t i = 0; i < n; ++i) {
            const double g = self.scratch(i, 0);
            const double lse = self.value(i, 0);
            for (std::size_t j = 0; j < k; ++j)
                xn->scratch(i, j) += g * std::exp(xn->value(i, j) - lse);
        }
    }));
}

Var slice_cols(const Var& x, std::size_t c0, std::size_t c1) {
    if (c0 >= c1 || c1 > x.cols())
        throw ShapeError("slice_cols: invalid range [" + std::to_string(c0) + "," +
                         std::to_string(c1) + ") for " + x.value().shape_str());
    const std::size_t n = x.rows(), m = c1 - c0;
    Matrix out(n, m);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) out(i, j) = x.value()(i, c0 + j);
    auto xn = x.node();
    return Var(make_node(std::move(out), {xn}, [xn, c0, n, m](Node& self) {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < m; ++j) xn->scratch(i, c0 + j) += self.scratch(i, j);
    }));
}

Var concat_rows(const Var& a, const Var& b) {
    require_column(a, "concat_rows");
    require_column(b, "concat_rows");
    const std::size_t na = a.rows(), nb = b.rows();
    Matrix out(na + nb, 1);
    for (std::size_t i = 0; i < na; ++i) out(i, 0) = a.value()(i, 0);
    for (std::size_t i = 0; i < nb; ++i) out(na + i, 0) = b.value()(i, 0);
    auto an = a.node();
    auto bn = b.node();
    return Var(make_node(std::move(out), {an, bn}, [an, bn, na, nb](Node& self) {
        for (std::size_t i = 0; i < na; ++i) an->scratch(i, 0) += self.scratch(i, 0);
        for (std::size_t i = 0; i < nb; ++i) bn->scratch(i, 0) += self.scratch(na + i, 0);
    }));
}

SortResult sort_column(const Var& x) {
    require_column(x, "sort_column");
    const std::size_t n = x.rows();
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::stable_sort(perm.begin(), perm.end(), [&](std::size_t i, std::size_t j) {
        return x.value()(i, 0) < x.value()(j, 0);
    });
    Matrix out(n, 1);
    for (std::size_t i = 0; i < n; ++i) out(i, 0) = x.value()(perm[i], 0);
    auto xn = x.node();
    Var sorted(make_node(std::move(out), {xn}, [xn, perm](Node& self) {
        for (std::size_t i = 0; i < perm.size(); ++i)
            xn->scratch(perm[i], 0) += self.scratch(i, 0);
    }));
    return {sorted, perm};
}

Var adjacent_diff(const Var& x) {
    require_column(x, "adjacent_diff");
    if (x.rows() < 2) throw ContractError("adjacent_diff: need at least 2 rows");
    const std::size_t n = x.rows();
    Matrix out(n - 1, 1);
    for (std::size_t i = 0; i + 1 < n; ++i) out(i, 0) = x.value()(i + 1, 0) - x.value()(i, 0);
    auto xn = x.node();
    return Var(make_node(std::move(out), {xn}, [xn, n](Node& self) {
        for (std::size_t i = 0; i + 1 < n; ++i) {
            const double g = self.scratch(i, 0);
            xn->scratch(i + 1, 0) += g;
            xn->scratch(i, 0) -= g;
        }
    }));
}

}  // namespace distreg::ad
