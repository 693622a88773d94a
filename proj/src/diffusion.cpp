#include "polyglot/diffusion.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "polyglot/errors.hpp"

namespace polyglot {

namespace {

double cosine_f(double t) {
    const double c = std::cos((t + kCosineOffset) / (1.0 + kCosineOffset) * std::numbers::pi / 2.0);
    return c * c;
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
    if (a.rows != b.rows || a.cols != b.cols) {
        throw ShapeError(std::string(what) + ": shape mismatch");
    }
}

Matrix current_slice(const Matrix& full, std::size_t window) {
    if (full.rows < window) {
        throw ShapeError("sample_window: estimate shorter than the window");
    }
    return full.slice_rows(full.rows - window, full.rows);
}

}  // namespace

DiffusionSchedule cosine_schedule(std::size_t steps) {
    if (steps == 0) {
        throw ShapeError("cosine_schedule: N must be at least 1");
    }
    DiffusionSchedule s;
    s.steps = steps;
    s.alpha_bar.assign(steps + 1, 1.0);
    s.betas.assign(steps + 1, 0.0);
    const auto N = static_cast<double>(steps);
    for (std::size_t n = 1; n <= steps; ++n) {
        const double ratio = cosine_f(static_cast<double>(n) / N) / cosine_f(static_cast<double>(n - 1) / N);
        s.betas[n] = std::min(1.0 - ratio, kMaxBeta);
        s.alpha_bar[n] = s.alpha_bar[n - 1] * (1.0 - s.betas[n]);
    }
    return s;
}

double DiffusionSchedule::posterior_coef_x0(std::size_t n) const {
    return betas.at(n) * std::sqrt(alpha_bar.at(n - 1)) / (1.0 - alpha_bar.at(n));
}

double DiffusionSchedule::posterior_coef_xn(std::size_t n) const {
    return (1.0 - alpha_bar.at(n - 1)) * std::sqrt(alpha(n)) / (1.0 - alpha_bar.at(n));
}

double DiffusionSchedule::posterior_variance(std::size_t n) const {
    return betas.at(n) * (1.0 - alpha_bar.at(n - 1)) / (1.0 - alpha_bar.at(n));
}

Matrix q_sample(const DiffusionSchedule& schedule, const Matrix& x0, std::size_t n, const Matrix& noise) {
    if (n > schedule.steps) {
        throw ShapeError("q_sample: step " + std::to_string(n) + " out of range");
    }
    require_same_shape(x0, noise, "q_sample");
    const double a = std::sqrt(schedule.alpha_bar[n]);
    const double b = std::sqrt(1.0 - schedule.alpha_bar[n]);
    Matrix out(x0.rows, x0.cols);
    for (std::size_t i = 0; i < x0.data.size(); ++i) {
        out.data[i] = static_cast<float>(a * x0.data[i] + b * noise.data[i]);
    }
    return out;
}

Matrix standard_normal(std::size_t rows, std::size_t cols, Rng& rng) {
    Matrix out(rows, cols);
    for (auto& v : out.data) {
        v = static_cast<float>(rng.normal());
    }
    return out;
}

Matrix guided_estimate(const Estimator& estimator, const WindowInputs& inputs, std::size_t n,
                       const GuidanceConfig& guidance) {
    const double wa = guidance.w_audio;
    const double wc = guidance.w_cond;
    if (!std::isfinite(wa) || !std::isfinite(wc)) {
        throw NumericError("guided_estimate: non-finite guidance weight");
    }
    // Rearranged as x_ac + (wc-1)(x_ac - x_a0) + (wa-1)(x_a0 - x_00).
    const Matrix x_ac = estimator(inputs, n, true, true);
    if (wa == 1.0 && wc == 1.0) {
        return x_ac;
    }
    const Matrix x_a0 = estimator(inputs, n, true, false);
    require_same_shape(x_ac, x_a0, "guided_estimate");
    Matrix x_00;
    if (wa != 1.0) {
        x_00 = estimator(inputs, n, false, false);
        require_same_shape(x_ac, x_00, "guided_estimate");
    }
    Matrix out(x_ac.rows, x_ac.cols);
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        double v = x_ac.data[i] + (wc - 1.0) * (static_cast<double>(x_ac.data[i]) - x_a0.data[i]);
        if (wa != 1.0) {
            v += (wa - 1.0) * (static_cast<double>(x_a0.data[i]) - x_00.data[i]);
        }
        out.data[i] = static_cast<float>(v);
    }
    return out;
}

Matrix sample_window(const Estimator& estimator, const DiffusionSchedule& schedule, const Matrix& prev_clean,
                     const Matrix& prev_audio, const Matrix& cur_audio, const GuidanceConfig& guidance, Rng& rng) {
    const std::size_t window = cur_audio.rows;
    const std::size_t k = prev_clean.cols;
    WindowInputs in{prev_clean, standard_normal(window, k, rng), prev_audio, cur_audio};
    for (std::size_t n = schedule.steps; n >= 1; --n) {
        const Matrix x0 = current_slice(guided_estimate(estimator, in, n, guidance), window);
        if (x0.cols != k) {
            throw ShapeError("sample_window: estimator width mismatch");
        }
        if (n == 1) {
            in.noisy = x0;
        } else {
            const double c0 = schedule.posterior_coef_x0(n);
            const double cn = schedule.posterior_coef_xn(n);
            const double sd = std::sqrt(schedule.posterior_variance(n));
            for (std::size_t i = 0; i < x0.data.size(); ++i) {
                const double mean = c0 * x0.data[i] + cn * in.noisy.data[i];
                in.noisy.data[i] = static_cast<float>(mean + sd * rng.normal());
            }
        }
        for (float v : in.noisy.data) {
            if (!std::isfinite(v)) {
                throw NumericError("sample_window: non-finite state at step " + std::to_string(n));
            }
        }
    }
    return in.noisy;
}

std::vector<WindowPlanEntry> window_plan(std::size_t frames, std::size_t window) {
    if (window == 0) {
        throw ShapeError("window_plan: window must be positive");
    }
    std::vector<WindowPlanEntry> plan;
    for (std::size_t s = 0; s < frames; s += window) {
        plan.push_back({s, std::min(window, frames - s)});
    }
    return plan;
}

Matrix sample_sequence(const Estimator& estimator, const DiffusionSchedule& schedule, const Matrix& audio,
                       const Matrix& start_motion, const Matrix& start_audio, std::size_t window,
                       const GuidanceConfig& guidance, const Rng& rng) {
    if (audio.rows == 0) {
        throw ShapeError("sample_sequence: T must be at least 1");
    }
    const std::size_t context = start_motion.rows;
    if (start_audio.rows != context || start_audio.cols != audio.cols || context >= window) {
        throw ShapeError("sample_sequence: start features do not match the window layout");
    }
    const std::size_t k = start_motion.cols;
    Matrix out(audio.rows, k);
    const auto plan = window_plan(audio.rows, window);
    for (std::size_t w = 0; w < plan.size(); ++w) {
        const auto [start, valid] = plan[w];
        const Matrix cur_audio = pad_rows_edge(audio.slice_rows(start, start + valid), window);
        Matrix prev_clean = start_motion;
        Matrix prev_audio = start_audio;
        if (start > 0) {
            prev_clean = out.slice_rows(start - context, start);
            prev_audio = audio.slice_rows(start - context, start);
        }
        Rng window_rng = rng.fork(w);
        const Matrix frames =
            sample_window(estimator, schedule, prev_clean, prev_audio, cur_audio, guidance, window_rng);
        std::copy(frames.data.begin(), frames.data.begin() + static_cast<std::ptrdiff_t>(valid * k),
                  out.data.begin() + static_cast<std::ptrdiff_t>(start * k));
    }
    return out;
}

}  // namespace polyglot
