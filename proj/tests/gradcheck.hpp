#pragma once

// Finite-difference gradient checking shared by the autodiff/loss/model test
// suites. Compares a fresh-graph autodiff gradient against central
// differences computed through the same builder.

#include <cmath>
#include <functional>
#include <vector>

#include "distreg/autodiff.hpp"

namespace gradcheck {

using distreg::ad::Var;

// Max absolute gradient error over all leaf entries, scaled by the gradient's
// own magnitude: ||g_ad - g_fd||_inf / max(1, ||g_fd||_inf). True
// per-component relative error is undefined where components cross zero.
inline double run(const std::function<Var()>& build, std::vector<Var> leaves, double h = 1e-6) {
    for (auto& leaf : leaves) leaf.zero_grad();
    Var loss = build();
    distreg::ad::backward(loss);

    double max_abs_err = 0.0;
    double max_fd = 0.0;
    for (auto& leaf : leaves) {
        for (std::size_t i = 0; i < leaf.value().size(); ++i) {
            const double orig = leaf.value()[i];
            leaf.value()[i] = orig + h;
            const double fp = build().scalar_value();
            leaf.value()[i] = orig - h;
            const double fm = build().scalar_value();
            leaf.value()[i] = orig;
            const double fd = (fp - fm) / (2.0 * h);
            max_fd = std::max(max_fd, std::fabs(fd));
            max_abs_err = std::max(max_abs_err, std::fabs(leaf.grad()[i] - fd));
        }
    }
    return max_abs_err / std::max(1.0, max_fd);
}

// Smallest pairwise gap within a value set; used to stay away from sort/abs
// tie neighborhoods before finite differencing.
inline double min_pairwise_gap(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    double gap = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < values.size(); ++i)
        gap = std::min(gap, values[i + 1] - values[i]);
    return gap;
}

}  // namespace gradcheck
