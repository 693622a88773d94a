#include "polyglot/numerics/adam.hpp"

#include <cmath>
#include <string>

namespace polyglot::nn {

Adam::Adam(std::vector<Tensor> params, AdamConfig config) : params_(std::move(params)) {
    state_.config = config;
    for (const auto& p : params_) {
        state_.first_moment.emplace_back(p.numel(), Real{0});
        state_.second_moment.emplace_back(p.numel(), Real{0});
    }
}

void Adam::step() {
    for (std::size_t i = 0; i < params_.size(); ++i) {
        for (Real g : params_[i].grad()) {
            if (!std::isfinite(g)) {
                throw NumericError("adam_step: non-finite gradient in parameter " + std::to_string(i));
            }
        }
    }
    const auto& cfg = state_.config;
    ++state_.step;
    const double t = static_cast<double>(state_.step);
    const double correction1 = 1.0 - std::pow(cfg.beta1, t);
    const double correction2 = 1.0 - std::pow(cfg.beta2, t);
    for (std::size_t i = 0; i < params_.size(); ++i) {
        auto& param = params_[i];
        const auto grad = param.grad();
        auto values = param.mutable_values();
        auto& m = state_.first_moment[i];
        auto& v = state_.second_moment[i];
        for (std::size_t e = 0; e < values.size(); ++e) {
            const double g = grad.empty() ? 0.0 : static_cast<double>(grad[e]);
            const double mn = cfg.beta1 * m[e] + (1.0 - cfg.beta1) * g;
            const double vn = cfg.beta2 * v[e] + (1.0 - cfg.beta2) * g * g;
            m[e] = static_cast<Real>(mn);
            v[e] = static_cast<Real>(vn);
            const double update = cfg.learning_rate * (mn / correction1) / (std::sqrt(vn / correction2) + cfg.epsilon);
            values[e] = static_cast<Real>(values[e] - update);
        }
    }
}

void Adam::zero_grad() {
    for (auto& p : params_) {
        p.zero_grad();
    }
}

double clip_grad_norm(const std::vector<Tensor>& params, double max_norm) {
    double total = 0.0;
    for (const auto& p : params) {
        for (Real g : p.grad()) {
            total += static_cast<double>(g) * g;
        }
    }
    const double norm = std::sqrt(total);
    if (norm > max_norm && norm > 0.0) {
        const auto factor = static_cast<Real>(max_norm / norm);
        for (auto p : params) {
            if (p.has_grad()) {
                for (auto& g : p.mutable_grad()) {
                    g *= factor;
                }
            }
        }
    }
    return norm;
}

}  // namespace polyglot::nn
