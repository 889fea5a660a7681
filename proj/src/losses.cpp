#include "distreg/losses.hpp"

#include <algorithm>
#include <cmath>

#include "distreg/errors.hpp"

namespace distreg::losses {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

ad::Var const_column(const std::vector<double>& v) { return ad::Var::column(v); }

void require_pred_column(const ad::Var& pred, const std::vector<double>& target, const char* op) {
    if (pred.cols() != 1)
        throw ShapeError(std::string(op) + ": pred must be n x 1, got " + pred.value().shape_str());
    if (pred.rows() != target.size())
        throw ContractError(std::string(op) + ": pred has " + std::to_string(pred.rows()) +
                            " rows, target has " + std::to_string(target.size()));
    if (target.empty()) throw ContractError(std::string(op) + ": empty batch");
}

}  // namespace

std::string family_name(Family f) {
    switch (f) {
        case Family::CompositeWasserstein: return "wasserstein";
        case Family::CompositeCramer: return "cramer";
        case Family::Mse: return "mse";
        case Family::GaussianNll: return "gaussian-nll";
        case Family::MdnNll: return "mdn-nll";
        case Family::Pinball: return "pinball";
    }
    return "?";
}

Family family_from_name(const std::string& name) {
    if (name == "wasserstein") return Family::CompositeWasserstein;
    if (name == "cramer") return Family::CompositeCramer;
    if (name == "mse") return Family::Mse;
    if (name == "gaussian-nll") return Family::GaussianNll;
    if (name == "mdn-nll") return Family::MdnNll;
    if (name == "pinball") return Family::Pinball;
    throw ConfigError("unknown loss family '" + name + "'");
}

std::string variant_name(Variant v) {
    switch (v) {
        case Variant::Simple: return "simple";
        case Variant::Range: return "range";
        case Variant::Default: return "default";
        case Variant::Custom: return "custom";
    }
    return "?";
}

Variant variant_from_name(const std::string& name) {
    if (name == "simple") return Variant::Simple;
    if (name == "range") return Variant::Range;
    if (name == "default") return Variant::Default;
    if (name == "custom") return Variant::Custom;
    throw ConfigError("unknown loss variant '" + name + "'");
}

LossSpec LossSpec::make(Family family, Variant variant, double alpha, double beta, double epsilon,
                        std::vector<double> quantile_levels) {
    LossSpec spec;
    spec.family = family;
    spec.variant = variant;
    spec.alpha = alpha;
    spec.beta = beta;
    spec.epsilon = epsilon;
    spec.quantile_levels = std::move(quantile_levels);
    if (spec.is_composite()) {
        switch (variant) {
            case Variant::Simple: spec.beta = 0.0; break;
            case Variant::Range: spec.beta = spec.alpha / 2.0; break;
            case Variant::Default:
                spec.alpha = 1.0;
                spec.beta = 0.0;
                break;
            case Variant::Custom: break;
        }
    }
    spec.validate();
    return spec;
}

void LossSpec::validate() const {
    if (alpha < 0.0 || beta < 0.0) throw ConfigError("loss weights must be nonnegative");
    if (epsilon <= 0.0) throw ConfigError("loss epsilon must be positive");
    if (is_composite()) {
        if (variant == Variant::Simple && beta != 0.0)
            throw ConfigError("simple variant requires beta = 0");
        if (variant == Variant::Range && beta != alpha / 2.0)
            throw ConfigError("range variant requires beta = alpha/2");
        if (variant == Variant::Default && (alpha != 1.0 || beta != 0.0))
            throw ConfigError("default variant requires alpha = 1, beta = 0");
    }
    if (family == Family::Pinball) {
        if (quantile_levels.empty()) throw ConfigError("pinball requires quantile levels");
        double prev = 0.0;
        for (double t : quantile_levels) {
            if (t <= prev || t >= 1.0)
                throw ConfigError("quantile levels must be strictly increasing in (0,1)");
            prev = t;
        }
    }
}

ad::Var raw_rmse(const ad::Var& pred, const std::vector<double>& target, double epsilon) {
    require_pred_column(pred, target, "raw_rmse");
    ad::Var diff = ad::sub(pred, const_column(target));
    ad::Var mse = ad::mean_all(ad::square(diff));
    return ad::sqrt(ad::affine(mse, 1.0, epsilon));
}

ad::Var wasserstein_batch(const ad::Var& pred, const std::vector<double>& target) {
    require_pred_column(pred, target, "wasserstein_batch");
    ad::Var sorted_pred = ad::sort_column(pred).sorted;
    std::vector<double> sorted_target = target;
    std::sort(sorted_target.begin(), sorted_target.end());
    return ad::mean_all(ad::abs(ad::sub(sorted_pred, const_column(sorted_target))));
}

ad::Var cramer_batch(const ad::Var& pred, const std::vector<double>& target) {
    require_pred_column(pred, target, "cramer_batch");
    const std::size_t n = target.size();
    if (n == 1) {
        // Single breakpoint pair: CDF gap is 1 between the two values.
        return ad::abs(ad::sub(pred, const_column(target)));
    }
    // Pool both samples and sort once; provenance is recovered from the
    // permutation (indices < n are predictions).
    auto [pooled, perm] = ad::sort_column(ad::concat_rows(pred, const_column(target)));
    // Squared CDF gap on each interval between consecutive pooled values.
    // The gap depends only on the interleaving order, which is locally
    // constant in the positions, so it enters as a constant coefficient.
    std::vector<double> coeff(2 * n - 1);
    long pred_seen = 0, target_seen = 0;
    for (std::size_t i = 0; i + 1 < 2 * n; ++i) {
        if (perm[i] < n)
            ++pred_seen;
        else
            ++target_seen;
        const double gap = static_cast<double>(pred_seen - target_seen) / static_cast<double>(n);
        coeff[i] = gap * gap;
    }
    ad::Var widths = ad::adjacent_diff(pooled);
    return ad::sum_all(ad::mul(widths, ad::Var::column(coeff)));
}

ad::Var range_penalty(const ad::Var& pred, const std::vector<double>& target) {
    require_pred_column(pred, target, "range_penalty");
    const auto [lo_it, hi_it] = std::minmax_element(target.begin(), target.end());
    const double target_range = *hi_it - *lo_it;
    ad::Var pred_range = ad::sub(ad::reduce_max(pred), ad::reduce_min(pred));
    return ad::abs(ad::affine(pred_range, 1.0, -target_range));
}

ad::Var normalize(const ad::Var& distance) {
    if (!distance.value().is_scalar())
        throw ShapeError("normalize: expected scalar, got " + distance.value().shape_str());
    if (distance.scalar_value() < 0.0)
        throw ContractError("normalize: distance must be nonnegative");
    // 1 - 1/(1+D)
    ad::Var denom = ad::affine(distance, 1.0, 1.0);
    ad::Var inv = ad::div(ad::Var::scalar(1.0), denom);
    return ad::affine(inv, -1.0, 1.0);
}

ad::Var composite_loss(const ad::Var& pred, const std::vector<double>& target, const LossSpec& spec) {
    if (!spec.is_composite())
        throw ContractError("composite_loss: spec family is " + family_name(spec.family));
    ad::Var loss = normalize(raw_rmse(pred, target, spec.epsilon));
    if (spec.alpha > 0.0) {
        ad::Var dist = spec.family == Family::CompositeWasserstein ? wasserstein_batch(pred, target)
                                                                   : cramer_batch(pred, target);
        loss = ad::add(loss, ad::affine(normalize(dist), spec.alpha, 0.0));
    }
    if (spec.beta > 0.0)
        loss = ad::add(loss, ad::affine(normalize(range_penalty(pred, target)), spec.beta, 0.0));
    return loss;
}

ad::Var mse_loss(const ad::Var& pred, const std::vector<double>& target) {
    require_pred_column(pred, target, "mse_loss");
    return ad::mean_all(ad::square(ad::sub(pred, const_column(target))));
}

ad::Var gaussian_nll(const ad::Var& mu, const ad::Var& log_var, const std::vector<double>& target) {
    require_pred_column(mu, target, "gaussian_nll");
    if (!mu.value().same_shape(log_var.value()))
        throw ShapeError("gaussian_nll: mu and log_var shapes differ");
    ad::Var y = const_column(target);
    ad::Var sq = ad::square(ad::sub(y, mu));
    ad::Var inv_var = ad::exp(ad::negate(log_var));
    ad::Var per_sample = ad::add(log_var, ad::mul(sq, inv_var));
    return ad::mean_all(ad::affine(per_sample, 0.5, 0.5 * kLog2Pi));
}

ad::Var mdn_nll(const ad::Var& pi_logits, const ad::Var& mu, const ad::Var& sigma,
                const std::vector<double>& target) {
    const std::size_t n = target.size();
    const std::size_t k = pi_logits.cols();
    if (n == 0) throw ContractError("mdn_nll: empty batch");
    if (pi_logits.rows() != n || !mu.value().same_shape(pi_logits.value()) ||
        !sigma.value().same_shape(pi_logits.value()))
        throw ShapeError("mdn_nll: parameter shapes disagree");
    for (std::size_t i = 0; i < sigma.value().size(); ++i)
        if (!(sigma.value()[i] > 0.0)) throw ContractError("mdn_nll: sigma must be positive");

    // log pi_k, normalized per row
    ad::Var log_pi = ad::sub(pi_logits, ad::broadcast_col(ad::row_logsumexp(pi_logits), k));
    // log N(y; mu_k, sigma_k)
    Matrix y_wide(n, k);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < k; ++j) y_wide(i, j) = target[i];
    ad::Var z = ad::div(ad::sub(ad::Var(std::move(y_wide)), mu), sigma);
    ad::Var log_phi = ad::sub(ad::affine(ad::square(z), -0.5, -0.5 * kLog2Pi), ad::log(sigma));
    ad::Var log_lik = ad::row_logsumexp(ad::add(log_pi, log_phi));
    return ad::negate(ad::mean_all(log_lik));
}

ad::Var pinball_loss(const ad::Var& pred_q, const std::vector<double>& target,
                     const std::vector<double>& levels) {
    const std::size_t n = target.size();
    const std::size_t q = levels.size();
    if (n == 0) throw ContractError("pinball_loss: empty batch");
    if (pred_q.rows() != n || pred_q.cols() != q)
        throw ShapeError("pinball_loss: expected " + std::to_string(n) + "x" + std::to_string(q) +
                         ", got " + pred_q.value().shape_str());
    Matrix y_wide(n, q);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < q; ++j) y_wide(i, j) = target[i];
    ad::Var r = ad::sub(ad::Var(std::move(y_wide)), pred_q);
    // max(tau r, (tau-1) r) written as 0.5 ((2 tau - 1) r + |r|)
    std::vector<double> two_tau_m1(q);
    for (std::size_t j = 0; j < q; ++j) two_tau_m1[j] = 2.0 * levels[j] - 1.0;
    ad::Var skew = ad::mul_rowvec(r, ad::Var(Matrix::from_row(two_tau_m1)));
    return ad::mean_all(ad::affine(ad::add(skew, ad::abs(r)), 0.5, 0.0));
}

}  // namespace distreg::losses
