#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "polyglot/matrix.hpp"
#include "polyglot/numerics/rng.hpp"

namespace polyglot {

/// Cosine schedule with offset s = 0.008 and betas clipped to 0.999.
struct DiffusionSchedule {
    std::size_t steps = 0;
    std::vector<double> alpha_bar;  // N + 1 entries, alpha_bar[0] = 1
    std::vector<double> betas;      // betas[n] for n in [1, N]; betas[0] = 0

    [[nodiscard]] double alpha(std::size_t n) const { return 1.0 - betas.at(n); }
    /// Mean coefficients of q(x_{n-1} | x_n, x0) on x0 and x_n.
    [[nodiscard]] double posterior_coef_x0(std::size_t n) const;
    [[nodiscard]] double posterior_coef_xn(std::size_t n) const;
    /// beta-tilde.
    [[nodiscard]] double posterior_variance(std::size_t n) const;
};

inline constexpr double kCosineOffset = 0.008;
inline constexpr double kMaxBeta = 0.999;

DiffusionSchedule cosine_schedule(std::size_t steps);

/// sqrt(ab[n]) * x0 + sqrt(1 - ab[n]) * noise
Matrix q_sample(const DiffusionSchedule& schedule, const Matrix& x0, std::size_t n, const Matrix& noise);
Matrix standard_normal(std::size_t rows, std::size_t cols, Rng& rng);

struct GuidanceConfig {
    double w_audio = 1.15;
    double w_cond = 1.15;
};

/// Inputs of one denoising window; `noisy` is the current T_w x k state.
struct WindowInputs {
    Matrix prev_clean;
    Matrix noisy;
    Matrix prev_audio;
    Matrix cur_audio;
};

/// Clean-sequence estimator with the two guidance switches. Returns the full
/// (T_p+T_w) x k estimate.
using Estimator = std::function<Matrix(const WindowInputs&, std::size_t n, bool audio_on, bool cond_on)>;

/// x(0,0) + w_a (x(a,0) - x(0,0)) + w_c (x(a,c) - x(a,0)). Branches whose
/// weight makes them cancel are not evaluated, so w = (1, 1) returns x(a,c) itself.
Matrix guided_estimate(const Estimator& estimator, const WindowInputs& inputs, std::size_t n,
                       const GuidanceConfig& guidance);

/// Ancestral x0-parameterized reverse process for one window; returns T_w x k.
Matrix sample_window(const Estimator& estimator, const DiffusionSchedule& schedule, const Matrix& prev_clean,
                     const Matrix& prev_audio, const Matrix& cur_audio, const GuidanceConfig& guidance, Rng& rng);

struct WindowPlanEntry {
    std::size_t start = 0;
    std::size_t valid = 0;  // frames kept after truncation
};

/// Non-overlapping windows at 0, T_w, 2 T_w, ...; the last may be partial.
std::vector<WindowPlanEntry> window_plan(std::size_t frames, std::size_t window);

/// Samples a T-frame sequence window by window. The first window's context is
/// the learned start features; later windows carry the last T_p generated
/// frames and their audio. Partial windows are edge-padded then truncated.
Matrix sample_sequence(const Estimator& estimator, const DiffusionSchedule& schedule, const Matrix& audio,
                       const Matrix& start_motion, const Matrix& start_audio, std::size_t window,
                       const GuidanceConfig& guidance, const Rng& rng);

}  // namespace polyglot
