#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "distreg/autodiff.hpp"
#include "distreg/rng.hpp"

namespace distreg::models {

enum class Activation { Gelu, Tanh };
enum class HeadKind { Scalar, Gaussian, Quantile, Mixture };

std::string activation_name(Activation a);
Activation activation_from_name(const std::string& name);
std::string head_name(HeadKind h);
HeadKind head_from_name(const std::string& name);

struct ModelSpec {
    std::size_t input_dim = 0;
    std::vector<std::size_t> hidden = {64, 32};
    Activation activation = Activation::Gelu;
    std::vector<double> dropout = {0.1, 0.1};  // one rate per hidden layer
    bool batch_norm = false;
    HeadKind head = HeadKind::Scalar;
    std::size_t quantile_count = 3;    // Quantile head
    std::size_t mixture_components = 5;  // Mixture head

    std::size_t head_outputs() const;
    void validate() const;
};

enum class Mode { Train, Eval };

struct HeadOutput {
    HeadKind kind = HeadKind::Scalar;
    ad::Var scalar;              // Scalar: n x 1
    ad::Var mu, log_var;         // Gaussian: n x 1 each
    ad::Var quantiles;           // Quantile: n x Q
    ad::Var pi_logits, mixture_mu, sigma;  // Mixture: n x K each
};

// MLP with per-layer Linear -> [BatchNorm] -> activation -> [Dropout], then a
// linear head. Parameters live in persistent autodiff leaves; each forward
// builds a fresh graph over them.
class Model {
public:
    Model(ModelSpec spec, Rng& init_rng);

    const ModelSpec& spec() const { return spec_; }
    std::vector<ad::Var> parameters() const;
    std::size_t parameter_count() const;

    // Train mode draws inverted-dropout masks from `rng` and normalizes with
    // batch statistics (updating the running ones); eval mode is deterministic
    // and uses the running statistics. Train-mode batch norm needs at least
    // two rows for a defined variance.
    HeadOutput forward(const Matrix& X, Mode mode, Rng& rng);

    // Deterministic eval-mode forward (no dropout draws needed).
    HeadOutput forward_eval(const Matrix& X);

    // Scalar point predictions for metrics: Scalar head output, Gaussian mean,
    // or the median-most quantile column. Mixture: mixture mean.
    std::vector<double> predict_point(const Matrix& X);

    // Prediction sample used for distributional metrics: Scalar -> one value
    // per row; Gaussian/Mixture -> one seeded draw per row; Quantile -> union
    // of the per-row quantile values (after ordering).
    std::vector<double> predict_sample(const Matrix& X, Rng& rng);

    // JSON checkpoint keyed by parameter name, including running stats. The
    // hash is over the serialized bytes, so it detects any state mutation.
    std::string serialize() const;
    void deserialize(const std::string& json_text);
    std::uint64_t state_hash() const;

    static constexpr double kBnEpsilon = 1e-5;
    static constexpr double kBnMomentum = 0.1;
    static constexpr double kSigmaFloor = 1e-6;  // mixture scale floor

private:
    struct Layer {
        ad::Var weight;  // in x out
        ad::Var bias;    // 1 x out
        ad::Var bn_gamma, bn_beta;     // 1 x out, when batch_norm
        Matrix bn_running_mean, bn_running_var;  // 1 x out
        double dropout = 0.0;
    };

    ad::Var trunk_forward(const Matrix& X, Mode mode, Rng* rng);
    HeadOutput apply_head(const ad::Var& trunk_out) const;

    ModelSpec spec_;
    std::vector<Layer> layers_;  // hidden layers
    ad::Var head_weight_, head_bias_;
};

// Per-row ascending sort of predicted quantiles; evaluation-time fix for
// quantile crossing (training uses the raw outputs).
Matrix enforce_quantile_order(const Matrix& pred_q);

}  // namespace distreg::models
