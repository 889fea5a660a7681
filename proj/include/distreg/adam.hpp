#pragma once

#include <cmath>
#include <vector>

#include "distreg/autodiff.hpp"

namespace distreg::ad {

// Bias-corrected Adam over a fixed set of parameter leaves. step() consumes
// the accumulated grads and zeroes them afterwards.
class Adam {
public:
    struct Options {
        double lr = 1e-3;
        double beta1 = 0.9;
        double beta2 = 0.999;
        double epsilon = 1e-8;
        double weight_decay = 0.0;  // L2 added to the gradient before the moments
    };

    Adam(std::vector<Var> params, Options opts) : params_(std::move(params)), opts_(opts) {
        for (const auto& p : params_) {
            m_.emplace_back(p.rows(), p.cols());
            v_.emplace_back(p.rows(), p.cols());
        }
    }
    explicit Adam(std::vector<Var> params) : Adam(std::move(params), Options{}) {}

    void step() {
        ++t_;
        const double bc1 = 1.0 - std::pow(opts_.beta1, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(opts_.beta2, static_cast<double>(t_));
        for (std::size_t p = 0; p < params_.size(); ++p) {
            auto& theta = params_[p].value().data();
            auto& grad = params_[p].grad().data();
            auto& m = m_[p].data();
            auto& v = v_[p].data();
            for (std::size_t i = 0; i < theta.size(); ++i) {
                double g = grad[i];
                if (opts_.weight_decay != 0.0) g += opts_.weight_decay * theta[i];
                m[i] = opts_.beta1 * m[i] + (1.0 - opts_.beta1) * g;
                v[i] = opts_.beta2 * v[i] + (1.0 - opts_.beta2) * g * g;
                const double mhat = m[i] / bc1;
                const double vhat = v[i] / bc2;
                theta[i] -= opts_.lr * mhat / (std::sqrt(vhat) + opts_.epsilon);
            }
            params_[p].zero_grad();
        }
    }

    long step_count() const { return t_; }

private:
    std::vector<Var> params_;
    Options opts_;
    std::vector<Matrix> m_, v_;
    long t_ = 0;
};

}  // namespace distreg::ad
