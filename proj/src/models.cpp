#include "distreg/models.hpp"

#include <algorithm>
#include <cmath>

#include "distreg/errors.hpp"
#include "nlohmann/json.hpp"

namespace distreg::models {

using json = nlohmann::json;

std::string activation_name(Activation a) { return a == Activation::Gelu ? "gelu" : "tanh"; }

Activation activation_from_name(const std::string& name) {
    if (name == "gelu") return Activation::Gelu;
    if (name == "tanh") return Activation::Tanh;
    throw ConfigError("unknown activation '" + name + "'");
}

std::string head_name(HeadKind h) {
    switch (h) {
        case HeadKind::Scalar: return "scalar";
        case HeadKind::Gaussian: return "gaussian";
        case HeadKind::Quantile: return "quantile";
        case HeadKind::Mixture: return "mixture";
    }
    return "?";
}

HeadKind head_from_name(const std::string& name) {
    if (name == "scalar") return HeadKind::Scalar;
    if (name == "gaussian") return HeadKind::Gaussian;
    if (name == "quantile") return HeadKind::Quantile;
    if (name == "mixture") return HeadKind::Mixture;
    throw ConfigError("unknown head '" + name + "'");
}

std::size_t ModelSpec::head_outputs() const {
    switch (head) {
        case HeadKind::Scalar: return 1;
        case HeadKind::Gaussian: return 2;                    // mu, log sigma^2
        case HeadKind::Quantile: return quantile_count;
        case HeadKind::Mixture: return 3 * mixture_components;  // pi-logits, mu, pre-sigma
    }
    return 1;
}

void ModelSpec::validate() const {
    if (input_dim == 0) throw ConfigError("model input_dim must be >= 1");
    if (hidden.empty()) throw ConfigError("model needs at least one hidden layer");
    for (std::size_t w : hidden)
        if (w == 0) throw ConfigError("hidden widths must be >= 1");
    if (dropout.size() != hidden.size())
        throw ConfigError("need one dropout rate per hidden layer");
    for (double p : dropout)
        if (p < 0.0 || p >= 1.0) throw ConfigError("dropout rates must lie in [0,1)");
    if (head == HeadKind::Quantile && quantile_count < 1)
        throw ConfigError("quantile head needs at least one level");
    if (head == HeadKind::Mixture && mixture_components < 1)
        throw ConfigError("mixture head needs at least one component");
}

namespace {

Matrix kaiming_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    // fan-in Kaiming with gain sqrt(2)
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    Matrix w(fan_in, fan_out);
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = rng.uniform(-bound, bound);
    return w;
}

}  // namespace

Model::Model(ModelSpec spec, Rng& init_rng) : spec_(std::move(spec)) {
    spec_.validate();
    std::size_t in = spec_.input_dim;
    for (std::size_t l = 0; l < spec_.hidden.size(); ++l) {
        const std::size_t out = spec_.hidden[l];
        Layer layer;
        layer.weight = ad::Var(kaiming_uniform(in, out, init_rng));
        layer.bias = ad::Var(Matrix(1, out));
        if (spec_.batch_norm) {
            layer.bn_gamma = ad::Var(Matrix(1, out, 1.0));
            layer.bn_beta = ad::Var(Matrix(1, out));
            layer.bn_running_mean = Matrix(1, out, 0.0);
            layer.bn_running_var = Matrix(1, out, 1.0);
        }
        layer.dropout = spec_.dropout[l];
        layers_.push_back(std::move(layer));
        in = out;
    }
    head_weight_ = ad::Var(kaiming_uniform(in, spec_.head_outputs(), init_rng));
    head_bias_ = ad::Var(Matrix(1, spec_.head_outputs()));
}

std::vector<ad::Var> Model::parameters() const {
    std::vector<ad::Var> params;
    for (const auto& layer : layers_) {
        params.push_back(layer.weight);
        params.push_back(layer.bias);
        if (spec_.batch_norm) {
            params.push_back(layer.bn_gamma);
            params.push_back(layer.bn_beta);
        }
    }
    params.push_back(head_weight_);
    params.push_back(head_bias_);
    return params;
}

std::size_t Model::parameter_count() const {
    std::size_t count = 0;
    for (const auto& p : parameters()) count += p.value().size();
    return count;
}

ad::Var Model::trunk_forward(const Matrix& X, Mode mode, Rng* rng) {
    if (X.cols() != spec_.input_dim)
        throw ContractError("forward: expected " + std::to_string(spec_.input_dim) +
                            " features, got " + std::to_string(X.cols()));
    const std::size_t n = X.rows();
    ad::Var h(X);
    for (auto& layer : layers_) {
        h = ad::add_rowvec(ad::matmul(h, layer.weight), layer.bias);
        if (spec_.batch_norm) {
            if (mode == Mode::Train) {
                if (n < 2)
                    throw ContractError("batch norm in train mode needs batch size >= 2");
                ad::Var mu = ad::col_mean(h);
                ad::Var centered = ad::sub_rowvec(h, mu);
                ad::Var var = ad::col_mean(ad::square(centered));
                ad::Var inv_std = ad::div(ad::Var(Matrix(1, h.cols(), 1.0)),
                                          ad::sqrt(ad::affine(var, 1.0, kBnEpsilon)));
                h = ad::add_rowvec(ad::mul_rowvec(ad::mul_rowvec(centered, inv_std), layer.bn_gamma),
                                   layer.bn_beta);
                // Running stats track the batch stats outside the graph;
                // running variance uses the unbiased batch variance.
                const double unbias = static_cast<double>(n) / static_cast<double>(n - 1);
                for (std::size_t j = 0; j < mu.cols(); ++j) {
                    layer.bn_running_mean(0, j) = (1.0 - kBnMomentum) * layer.bn_running_mean(0, j) +
                                                  kBnMomentum * mu.value()(0, j);
                    layer.bn_running_var(0, j) = (1.0 - kBnMomentum) * layer.bn_running_var(0, j) +
                                                 kBnMomentum * var.value()(0, j) * unbias;
                }
            } else {
                ad::Var centered = ad::sub_rowvec(h, ad::Var(layer.bn_running_mean));
                Matrix inv(1, h.cols());
                for (std::size_t j = 0; j < h.cols(); ++j)
                    inv(0, j) = 1.0 / std::sqrt(layer.bn_running_var(0, j) + kBnEpsilon);
                h = ad::add_rowvec(
                    ad::mul_rowvec(ad::mul_rowvec(centered, ad::Var(inv)), layer.bn_gamma),
                    layer.bn_beta);
            }
        }
        h = spec_.activation == Activation::Gelu ? ad::gelu(h) : ad::tanh(h);
        if (mode == Mode::Train && layer.dropout > 0.0) {
            // inverted dropout: surviving units scaled by 1/(1-p)
            const double keep = 1.0 - layer.dropout;
            Matrix mask(h.rows(), h.cols());
            for (std::size_t i = 0; i < mask.size(); ++i)
                mask[i] = rng->bernoulli(keep) ? 1.0 / keep : 0.0;
            h = ad::mul(h, ad::Var(std::move(mask)));
        }
    }
    return ad::add_rowvec(ad::matmul(h, head_weight_), head_bias_);
}

HeadOutput Model::apply_head(const ad::Var& out) const {
    HeadOutput res;
    res.kind = spec_.head;
    switch (spec_.head) {
        case HeadKind::Scalar: res.scalar = out; break;
        case HeadKind::Gaussian:
            res.mu = ad::slice_cols(out, 0, 1);
            res.log_var = ad::slice_cols(out, 1, 2);
            break;
        case HeadKind::Quantile: res.quantiles = out; break;
        case HeadKind::Mixture: {
            const std::size_t k = spec_.mixture_components;
            res.pi_logits = ad::slice_cols(out, 0, k);
            res.mixture_mu = ad::slice_cols(out, k, 2 * k);
            // positive scales: elu(s) + 1 + sigma floor
            res.sigma = ad::affine(ad::elu(ad::slice_cols(out, 2 * k, 3 * k)), 1.0, 1.0 + kSigmaFloor);
            break;
        }
    }
    return res;
}

HeadOutput Model::forward(const Matrix& X, Mode mode, Rng& rng) {
    return apply_head(trunk_forward(X, mode, &rng));
}

HeadOutput Model::forward_eval(const Matrix& X) {
    return apply_head(trunk_forward(X, Mode::Eval, nullptr));
}

std::vector<double> Model::predict_point(const Matrix& X) {
    HeadOutput out = forward_eval(X);
    const std::size_t n = X.rows();
    std::vector<double> pred(n);
    switch (out.kind) {
        case HeadKind::Scalar:
            for (std::size_t i = 0; i < n; ++i) pred[i] = out.scalar.value()(i, 0);
            break;
        case HeadKind::Gaussian:
            for (std::size_t i = 0; i < n; ++i) pred[i] = out.mu.value()(i, 0);
            break;
        case HeadKind::Quantile: {
            const Matrix q = enforce_quantile_order(out.quantiles.value());
            const std::size_t mid = q.cols() / 2;
            for (std::size_t i = 0; i < n; ++i) pred[i] = q(i, mid);
            break;
        }
        case HeadKind::Mixture: {
            const std::size_t k = spec_.mixture_components;
            for (std::size_t i = 0; i < n; ++i) {
                double mx = out.pi_logits.value()(i, 0);
                for (std::size_t j = 1; j < k; ++j) mx = std::max(mx, out.pi_logits.value()(i, j));
                double z = 0.0, mean = 0.0;
                for (std::size_t j = 0; j < k; ++j) {
                    const double w = std::exp(out.pi_logits.value()(i, j) - mx);
                    z += w;
                    mean += w * out.mixture_mu.value()(i, j);
                }
                pred[i] = mean / z;
            }
            break;
        }
    }
    return pred;
}

std::vector<double> Model::predict_sample(const Matrix& X, Rng& rng) {
    HeadOutput out = forward_eval(X);
    const std::size_t n = X.rows();
    std::vector<double> sample;
    switch (out.kind) {
        case HeadKind::Scalar:
            sample.resize(n);
            for (std::size_t i = 0; i < n; ++i) sample[i] = out.scalar.value()(i, 0);
            break;
        case HeadKind::Gaussian:
            sample.resize(n);
            for (std::size_t i = 0; i < n; ++i) {
                const double sd = std::exp(0.5 * out.log_var.value()(i, 0));
                sample[i] = rng.normal(out.mu.value()(i, 0), sd);
            }
            break;
        case HeadKind::Quantile: {
            // every row contributes its Q ordered quantile values with equal weight
            const Matrix q = enforce_quantile_order(out.quantiles.value());
            sample.reserve(n * q.cols());
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < q.cols(); ++j) sample.push_back(q(i, j));
            break;
        }
        case HeadKind::Mixture: {
            const std::size_t k = spec_.mixture_components;
            sample.resize(n);
            for (std::size_t i = 0; i < n; ++i) {
                double mx = out.pi_logits.value()(i, 0);
                for (std::size_t j = 1; j < k; ++j) mx = std::max(mx, out.pi_logits.value()(i, j));
                double z = 0.0;
                std::vector<double> w(k);
                for (std::size_t j = 0; j < k; ++j) {
                    w[j] = std::exp(out.pi_logits.value()(i, j) - mx);
                    z += w[j];
                }
                double u = rng.uniform() * z;
                std::size_t pick = k - 1;
                for (std::size_t j = 0; j < k; ++j) {
                    if (u < w[j]) {
                        pick = j;
                        break;
                    }
                    u -= w[j];
                }
                sample[i] = rng.normal(out.mixture_mu.value()(i, pick), out.sigma.value()(i, pick));
            }
            break;
        }
    }
    return sample;
}

namespace {

json matrix_to_json(const Matrix& m) {
    return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", m.data()}};
}

Matrix matrix_from_json(const json& j) {
    Matrix m(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
    m.data() = j.at("data").get<std::vector<double>>();
    if (m.data().size() != m.rows() * m.cols()) throw ParseError("checkpoint: matrix size mismatch");
    return m;
}

}  // namespace

std::string Model::serialize() const {
    json j;
    j["schema"] = 1;
    j["head"] = head_name(spec_.head);
    json params = json::object();
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const std::string prefix = "layer" + std::to_string(l) + ".";
        params[prefix + "weight"] = matrix_to_json(layers_[l].weight.value());
        params[prefix + "bias"] = matrix_to_json(layers_[l].bias.value());
        if (spec_.batch_norm) {
            params[prefix + "bn_gamma"] = matrix_to_json(layers_[l].bn_gamma.value());
            params[prefix + "bn_beta"] = matrix_to_json(layers_[l].bn_beta.value());
            params[prefix + "bn_running_mean"] = matrix_to_json(layers_[l].bn_running_mean);
            params[prefix + "bn_running_var"] = matrix_to_json(layers_[l].bn_running_var);
        }
    }
    params["head.weight"] = matrix_to_json(head_weight_.value());
    params["head.bias"] = matrix_to_json(head_bias_.value());
    j["params"] = std::move(params);
    return j.dump();
}

void Model::deserialize(const std::string& json_text) {
    json j = json::parse(json_text);
    const json& params = j.at("params");
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const std::string prefix = "layer" + std::to_string(l) + ".";
        layers_[l].weight.value() = matrix_from_json(params.at(prefix + "weight"));
        layers_[l].bias.value() = matrix_from_json(params.at(prefix + "bias"));
        if (spec_.batch_norm) {
            layers_[l].bn_gamma.value() = matrix_from_json(params.at(prefix + "bn_gamma"));
            layers_[l].bn_beta.value() = matrix_from_json(params.at(prefix + "bn_beta"));
            layers_[l].bn_running_mean = matrix_from_json(params.at(prefix + "bn_running_mean"));
            layers_[l].bn_running_var = matrix_from_json(params.at(prefix + "bn_running_var"));
        }
    }
    head_weight_.value() = matrix_from_json(params.at("head.weight"));
    head_bias_.value() = matrix_from_json(params.at("head.bias"));
}

std::uint64_t Model::state_hash() const {
    const std::string bytes = serialize();
    std::uint64_t h = 0xCBF29CE484222325ULL;  // FNV-1a
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

Matrix enforce_quantile_order(const Matrix& pred_q) {
    Matrix out = pred_q;
    for (std::size_t i = 0; i < out.rows(); ++i) {
        std::vector<double> row(out.cols());
        for (std::size_t j = 0; j < out.cols(); ++j) row[j] = out(i, j);
        std::sort(row.begin(), row.end());
        for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) = row[j];
    }
    return out;
}

}  // namespace distreg::models
