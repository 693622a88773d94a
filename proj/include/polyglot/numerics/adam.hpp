#pragma once

#include <cstdint>
#include <vector>

#include "polyglot/numerics/tensor.hpp"

namespace polyglot::nn {

struct AdamConfig {
    double learning_rate = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Adam moments plus step counter for a fixed list of parameters.
struct AdamState {
    AdamConfig config;
    std::vector<std::vector<Real>> first_moment;
    std::vector<std::vector<Real>> second_moment;
    std::int64_t step = 0;
};

class Adam {
public:
    Adam(std::vector<Tensor> params, AdamConfig config = {});

    /// Bias-corrected update from each parameter's accumulated gradient.
    /// Missing gradients count as zero. Throws NumericError, leaving every
    /// parameter untouched, if any gradient is non-finite.
    void step();
    void zero_grad();

    [[nodiscard]] const std::vector<Tensor>& params() const noexcept { return params_; }
    [[nodiscard]] AdamState& state() noexcept { return state_; }
    [[nodiscard]] const AdamState& state() const noexcept { return state_; }

private:
    std::vector<Tensor> params_;
    AdamState state_;
};

/// Rescales all gradients so their joint L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
double clip_grad_norm(const std::vector<Tensor>& params, double max_norm);

}  // namespace polyglot::nn
