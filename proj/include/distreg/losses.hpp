#pragma once

#include <string>
#include <vector>

#include "distreg/autodiff.hpp"

namespace distreg::losses {

enum class Family { CompositeWasserstein, CompositeCramer, Mse, GaussianNll, MdnNll, Pinball };

// Named weight presets for the composite families: Simple fixes beta = 0,
// Range couples beta = alpha / 2, Default fixes alpha = 1, beta = 0. Custom
// leaves both weights free for sweeps.
enum class Variant { Simple, Range, Default, Custom };

std::string family_name(Family f);
Family family_from_name(const std::string& name);
std::string variant_name(Variant v);
Variant variant_from_name(const std::string& name);

struct LossSpec {
    Family family = Family::Mse;
    Variant variant = Variant::Custom;
    double alpha = 1.0;
    double beta = 0.0;
    double epsilon = 1e-8;
    std::vector<double> quantile_levels = {0.1, 0.5, 0.9};  // Pinball only

    // Applies the variant coupling and checks weight/level invariants.
    static LossSpec make(Family family, Variant variant, double alpha = 1.0, double beta = 0.0,
                         double epsilon = 1e-8, std::vector<double> quantile_levels = {0.1, 0.5, 0.9});

    bool is_composite() const {
        return family == Family::CompositeWasserstein || family == Family::CompositeCramer;
    }
    // Upper bound of the composite objective: each normalized term is < 1.
    double composite_bound() const { return 1.0 + alpha + beta; }

    void validate() const;
};

// sqrt(mean squared error + epsilon). The epsilon keeps the sqrt gradient
// bounded when predictions hit the targets exactly.
ad::Var raw_rmse(const ad::Var& pred, const std::vector<double>& target, double epsilon);

// Exact W1 between the two equal-size empirical batch distributions:
// mean |sort(pred)_i - sort(target)_i|.
ad::Var wasserstein_batch(const ad::Var& pred, const std::vector<double>& target);

// Exact integral of (F_pred - F_target)^2 over the pooled breakpoints. The
// CDF gap is constant between consecutive pooled values, so the integral is
// sum (dx) * gap^2, differentiable through the breakpoint positions.
ad::Var cramer_batch(const ad::Var& pred, const std::vector<double>& target);

// | range(pred) - range(target) |; gradient touches only the first extremal
// predictions.
ad::Var range_penalty(const ad::Var& pred, const std::vector<double>& target);

// 1 - 1/(1+D), mapping any nonnegative distance into [0,1) while preserving
// its minimizers.
ad::Var normalize(const ad::Var& distance);

// N(D_rmse) + alpha * N(D_dist) + beta * N(D_range), with D_dist selected by
// spec.family (Wasserstein or Cramer).
ad::Var composite_loss(const ad::Var& pred, const std::vector<double>& target, const LossSpec& spec);

ad::Var mse_loss(const ad::Var& pred, const std::vector<double>& target);

// Mean of 0.5 * (log 2pi + log sigma^2 + (y-mu)^2 / sigma^2) with the variance
// head predicting log sigma^2.
ad::Var gaussian_nll(const ad::Var& mu, const ad::Var& log_var, const std::vector<double>& target);

// -mean log sum_k softmax(pi_logits)_k * N(y; mu_k, sigma_k), via log-sum-exp.
// sigma must already be strictly positive (the mixture head applies
// elu(s) + 1 + eps_sigma).
ad::Var mdn_nll(const ad::Var& pi_logits, const ad::Var& mu, const ad::Var& sigma,
                const std::vector<double>& target);

// Mean over samples and levels of max(tau * r, (tau - 1) * r), r = y - q_tau.
ad::Var pinball_loss(const ad::Var& pred_q, const std::vector<double>& target,
                     const std::vector<double>& levels);

}  // namespace distreg::losses
