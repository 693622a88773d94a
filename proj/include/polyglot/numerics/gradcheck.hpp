#pragma once

#include <functional>
#include <string>
#include <vector>

#include "polyglot/numerics/tensor.hpp"

namespace polyglot::nn {

struct GradCheckResult {
    /// max over coordinates of |analytic - central| / (|central| + 1e-6)
    double max_rel_error = 0.0;
    bool finite = true;
    /// "param[i] coord j" of the worst coordinate, for diagnostics.
    std::string worst;

    [[nodiscard]] bool passed(double tol) const { return finite && max_rel_error < tol; }
};

/// Compares reverse-mode gradients of a scalar function against central
/// differences at steps `h` and `h/2`, Richardson-extrapolated (error O(h^4)). `f` must rebuild its graph on every call.
/// Parameter gradients are reset before and after the check.
GradCheckResult finite_difference_check(const std::function<Tensor()>& f, const std::vector<Tensor>& params,
                                        double h);

}  // namespace polyglot::nn
