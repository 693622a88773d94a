#include "polyglot/numerics/gradcheck.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace polyglot::nn {

namespace {

// Above the rounding noise of the differences for O(1) losses.
constexpr double kAbsoluteFloor = 1e-6;

std::string to_sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

}  // namespace

GradCheckResult finite_difference_check(const std::function<Tensor()>& f, const std::vector<Tensor>& params,
                                        double h) {
    if (!(h > 0.0)) {
        throw std::invalid_argument("finite_difference_check: h must be positive");
    }
    GradCheckResult result;
    for (auto p : params) {
        p.zero_grad();
    }
    const Tensor loss = f();
    if (!std::isfinite(static_cast<double>(loss.item()))) {
        result.finite = false;
        result.max_rel_error = std::numeric_limits<double>::infinity();
        result.worst = "f(x) non-finite";
        return result;
    }
    loss.backward();

    std::vector<std::vector<Real>> analytic;
    analytic.reserve(params.size());
    for (const auto& p : params) {
        const auto g = p.grad();
        analytic.emplace_back(p.numel(), Real{0});
        std::copy(g.begin(), g.end(), analytic.back().begin());
    }

    NoGradGuard no_grad;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Tensor p = params[pi];
        auto values = p.mutable_values();
        for (std::size_t e = 0; e < values.size(); ++e) {
            const Real saved = values[e];
            const auto eval_at = [&](double offset) {
                values[e] = static_cast<Real>(saved + offset);
                return static_cast<double>(f().item());
            };
            const double fp = eval_at(h);
            const double fm = eval_at(-h);
            const double fp2 = eval_at(h / 2);
            const double fm2 = eval_at(-h / 2);
            values[e] = saved;
            if (!std::isfinite(fp) || !std::isfinite(fm) || !std::isfinite(fp2) || !std::isfinite(fm2)) {
                result.finite = false;
                result.max_rel_error = std::numeric_limits<double>::infinity();
                result.worst = "param[" + std::to_string(pi) + "] coord " + std::to_string(e) + " non-finite";
                return result;
            }
            // Richardson extrapolation of two central differences.
            const double coarse = (fp - fm) / (2.0 * h);
            const double fine = (fp2 - fm2) / h;
            const double central = (4.0 * fine - coarse) / 3.0;
            const double err = std::abs(static_cast<double>(analytic[pi][e]) - central) / (std::abs(central) + kAbsoluteFloor);
            if (err > result.max_rel_error) {
                result.max_rel_error = err;
                result.worst = "param[" + std::to_string(pi) + "] coord " + std::to_string(e) + " (analytic " +
                               to_sci(analytic[pi][e]) + ", central " + to_sci(central) + ")";
            }
        }
    }
    for (auto p : params) {
        p.zero_grad();
    }
    return result;
}

}  // namespace polyglot::nn
