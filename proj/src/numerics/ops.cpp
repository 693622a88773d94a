#include "polyglot/numerics/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

namespace polyglot::nn {

using detail::make_result;
using detail::Node;

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape()) {
        throw ShapeError(std::string(op) + ": shape mismatch");
    }
}

void require_rank(const Tensor& a, std::size_t rank, const char* op) {
    if (a.rank() != rank) {
        throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank));
    }
}

// Accumulates `grad` into parent `i` when that parent wants gradients.
template <typename F>
void accumulate(Node& self, std::size_t i, F&& per_element) {
    Node& p = *self.parents[i];
    if (!p.requires_grad) {
        return;
    }
    auto& g = p.ensure_grad();
    for (std::size_t e = 0; e < g.size(); ++e) {
        g[e] += per_element(e);
    }
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add");
    std::vector<Real> out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = a.values()[i] + b.values()[i];
    }
    return make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
        accumulate(self, 0, [&](std::size_t e) { return self.grad[e]; });
        accumulate(self, 1, [&](std::size_t e) { return self.grad[e]; });
    });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "sub");
    std::vector<Real> out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = a.values()[i] - b.values()[i];
    }
    return make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
        accumulate(self, 0, [&](std::size_t e) { return self.grad[e]; });
        accumulate(self, 1, [&](std::size_t e) { return -self.grad[e]; });
    });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "mul");
    std::vector<Real> out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = a.values()[i] * b.values()[i];
    }
    return make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
        const auto& av = self.parents[0]->value;
        const auto& bv = self.parents[1]->value;
        accumulate(self, 0, [&](std::size_t e) { return self.grad[e] * bv[e]; });
        accumulate(self, 1, [&](std::size_t e) { return self.grad[e] * av[e]; });
    });
}

Tensor scale(const Tensor& a, Real s) {
    std::vector<Real> out(a.values().begin(), a.values().end());
    for (auto& v : out) {
        v *= s;
    }
    return make_result(a.shape(), std::move(out), {a}, [s](Node& self) {
        accumulate(self, 0, [&](std::size_t e) { return self.grad[e] * s; });
    });
}

Tensor add_scalar(const Tensor& a, Real s) {
    std::vector<Real> out(a.values().begin(), a.values().end());
    for (auto& v : out) {
        v += s;
    }
    return make_result(a.shape(), std::move(out), {a}, [](Node& self) {
        accumulate(self, 0, [&](std::size_t e) { return self.grad[e]; });
    });
}

Tensor square(const Tensor& a) {
    std::vector<Real> out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = a.values()[i] * a.values()[i];
    }
    return make_result(a.shape(), std::move(out), {a}, [](Node& self) {
        const auto& av = self.parents[0]->value;
        accumulate(self, 0, [&](std::size_t e) { return Real{2} * av[e] * self.grad[e]; });
    });
}

Tensor sqrt(const Tensor& a) {
    std::vector<Real> out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = std::sqrt(a.values()[i]);
    }
    return make_result(a.shape(), std::move(out), {a}, [](Node& self) {
        accumulate(self, 0, [&](std::size_t e) { return self.grad[e] / (Real{2} * self.value[e]); });
    });
}

Tensor map_unary(const Tensor& a, const std::function<Real(Real)>& f, const std::function<Real(Real)>& df) {
    std::vector<Real> out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = f(a.values()[i]);
    }
    return make_result(a.shape(), std::move(out), {a}, [df](Node& self) {
        const auto& av = self.parents[0]->value;
        accumulate(self, 0, [&](std::size_t e) { return self.grad[e] * df(av[e]); });
    });
}

Tensor gelu(const Tensor& a) {
    // tanh approximation
    constexpr Real c = static_cast<Real>(0.7978845608028654);  // sqrt(2/pi)
    constexpr Real k = static_cast<Real>(0.044715);
    std::vector<Real> out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const Real x = a.values()[i];
        out[i] = Real{0.5} * x * (Real{1} + std::tanh(c * (x + k * x * x * x)));
    }
    return make_result(a.shape(), std::move(out), {a}, [](Node& self) {
        const auto& av = self.parents[0]->value;
        accumulate(self, 0, [&](std::size_t e) {
            const Real x = av[e];
            const Real u = c * (x + k * x * x * x);
            const Real t = std::tanh(u);
            const Real du = c * (Real{1} + Real{3} * k * x * x);
            const Real d = Real{0.5} * (Real{1} + t) + Real{0.5} * x * (Real{1} - t * t) * du;
            return self.grad[e] * d;
        });
    });
}

Tensor tanh(const Tensor& a) {
    std::vector<Real> out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = std::tanh(a.values()[i]);
    }
    return make_result(a.shape(), std::move(out), {a}, [](Node& self) {
        accumulate(self, 0, [&](std::size_t e) { return self.grad[e] * (Real{1} - self.value[e] * self.value[e]); });
    });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_rank(a, 2, "matmul");
    require_rank(b, 2, "matmul");
    const std::size_t m = a.rows();
    const std::size_t k = a.cols();
    const std::size_t n = b.cols();
    if (b.rows() != k) {
        throw ShapeError("matmul: inner dimensions differ");
    }
    std::vector<Real> out(m * n, Real{0});
    const Real* av = a.values().data();
    const Real* bv = b.values().data();
    for (std::size_t i = 0; i < m; ++i) {
        Real* crow = out.data() + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const Real s = av[i * k + p];
            const Real* brow = bv + p * n;
            for (std::size_t j = 0; j < n; ++j) {
                crow[j] += s * brow[j];
            }
        }
    }
    return make_result({m, n}, std::move(out), {a, b}, [m, k, n](Node& self) {
        const Real* dc = self.grad.data();
        Node& an = *self.parents[0];
        Node& bn = *self.parents[1];
        if (an.requires_grad) {
            auto& da = an.ensure_grad();
            const Real* bvv = bn.value.data();
            for (std::size_t i = 0; i < m; ++i) {
                for (std::size_t p = 0; p < k; ++p) {
                    Real acc = 0;
                    const Real* brow = bvv + p * n;
                    const Real* drow = dc + i * n;
                    for (std::size_t j = 0; j < n; ++j) {
                        acc += drow[j] * brow[j];
                    }
                    da[i * k + p] += acc;
                }
            }
        }
        if (bn.requires_grad) {
            auto& db = bn.ensure_grad();
            const Real* avv = an.value.data();
            for (std::size_t i = 0; i < m; ++i) {
                const Real* drow = dc + i * n;
                for (std::size_t p = 0; p < k; ++p) {
                    const Real s = avv[i * k + p];
                    Real* dbrow = db.data() + p * n;
                    for (std::size_t j = 0; j < n; ++j) {
                        dbrow[j] += s * drow[j];
                    }
                }
            }
        }
    });
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
    require_rank(a, 2, "matmul_nt");
    require_rank(b, 2, "matmul_nt");
    const std::size_t m = a.rows();
    const std::size_t k = a.cols();
    const std::size_t n = b.rows();
    if (b.cols() != k) {
        throw ShapeError("matmul_nt: inner dimensions differ");
    }
    std::vector<Real> out(m * n);
    const Real* av = a.values().data();
    const Real* bv = b.values().data();
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            Real acc = 0;
            for (std::size_t p = 0; p < k; ++p) {
                acc += av[i * k + p] * bv[j * k + p];
            }
            out[i * n + j] = acc;
        }
    }
    return make_result({m, n}, std::move(out), {a, b}, [m, k, n](Node& self) {
        const Real* dc = self.grad.data();
        Node& an = *self.parents[0];
        Node& bn = *self.parents[1];
        if (an.requires_grad) {
            auto& da = an.ensure_grad();
            for (std::size_t i = 0; i < m; ++i) {
                for (std::size_t j = 0; j < n; ++j) {
                    const Real g = dc[i * n + j];
                    const Real* brow = bn.value.data() + j * k;
                    Real* darow = da.data() + i * k;
                    for (std::size_t p = 0; p < k; ++p) {
                        darow[p] += g * brow[p];
                    }
                }
            }
        }
        if (bn.requires_grad) {
            auto& db = bn.ensure_grad();
            for (std::size_t i = 0; i < m; ++i) {
                const Real* arow = an.value.data() + i * k;
                for (std::size_t j = 0; j < n; ++j) {
                    const Real g = dc[i * n + j];
                    Real* dbrow = db.data() + j * k;
                    for (std::size_t p = 0; p < k; ++p) {
                        dbrow[p] += g * arow[p];
                    }
                }
            }
        }
    });
}

Tensor transpose(const Tensor& a) {
    require_rank(a, 2, "transpose");
    const std::size_t m = a.rows();
    const std::size_t n = a.cols();
    std::vector<Real> out(m * n);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            out[j * m + i] = a.values()[i * n + j];
        }
    }
    return make_result({n, m}, std::move(out), {a}, [m, n](Node& self) {
        accumulate(self, 0, [&](std::size_t e) { return self.grad[(e % n) * m + e / n]; });
    });
}

Tensor add_rowvec(const Tensor& a, const Tensor& v) {
    require_rank(a, 2, "add_rowvec");
    require_rank(v, 1, "add_rowvec");
    const std::size_t m = a.rows();
    const std::size_t n = a.cols();
    if (v.numel() != n) {
        throw ShapeError("add_rowvec: vector length differs from column count");
    }
    std::vector<Real> out(a.values().begin(), a.values().end());
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            out[i * n + j] += v.values()[j];
        }
    }
    return make_result(a.shape(), std::move(out), {a, v}, [m, n](Node& self) {
        accumulate(self, 0, [&](std::size_t e) { return self.grad[e]; });
        Node& vn = *self.parents[1];
        if (vn.requires_grad) {
            auto& g = vn.ensure_grad();
            for (std::size_t i = 0; i < m; ++i) {
                for (std::size_t j = 0; j < n; ++j) {
                    g[j] += self.grad[i * n + j];
                }
            }
        }
    });
}

Tensor mul_rowvec(const Tensor& a, const Tensor& v) {
    require_rank(a, 2, "mul_rowvec");
    require_rank(v, 1, "mul_rowvec");
    const std::size_t m = a.rows();
    const std::size_t n = a.cols();
    if (v.numel() != n) {
        throw ShapeError("mul_rowvec: vector length differs from column count");
    }
    std::vector<Real> out(a.values().begin(), a.values().end());
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            out[i * n + j] *= v.values()[j];
        }
    }
    return make_result(a.shape(), std::move(out), {a, v}, [m, n](Node& self) {
        const auto& av = self.parents[0]->value;
        const auto& vv = self.parents[1]->value;
        accumulate(self, 0, [&](std::size_t e) { return self.grad[e] * vv[e % n]; });
        Node& vn = *self.parents[1];
        if (vn.requires_grad) {
            auto& g = vn.ensure_grad();
            for (std::size_t i = 0; i < m; ++i) {
                for (std::size_t j = 0; j < n; ++j) {
                    g[j] += self.grad[i * n + j] * av[i * n + j];
                }
            }
        }
    });
}

Tensor broadcast_rows(const Tensor& v, std::size_t m) {
    require_rank(v, 1, "broadcast_rows");
    const std::size_t n = v.numel();
    std::vector<Real> out(m * n);
    for (std::size_t i = 0; i < m; ++i) {
        std::copy(v.values().begin(), v.values().end(), out.begin() + static_cast<std::ptrdiff_t>(i * n));
    }
    return make_result({m, n}, std::move(out), {v}, [m, n](Node& self) {
        Node& vn = *self.parents[0];
        if (!vn.requires_grad) {
            return;
        }
        auto& g = vn.ensure_grad();
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                g[j] += self.grad[i * n + j];
            }
        }
    });
}

Tensor softmax_rows(const Tensor& a, std::span<const std::uint8_t> mask) {
    require_rank(a, 2, "softmax_rows");
    const std::size_t m = a.rows();
    const std::size_t n = a.cols();
    if (!mask.empty() && mask.size() != m * n) {
        throw ShapeError("softmax_rows: mask shape mismatch");
    }
    std::vector<Real> out(m * n, Real{0});
    for (std::size_t i = 0; i < m; ++i) {
        const Real* x = a.values().data() + i * n;
        Real mx = -std::numeric_limits<Real>::infinity();
        bool any = false;
        for (std::size_t j = 0; j < n; ++j) {
            if (mask.empty() || mask[i * n + j]) {
                any = true;
                mx = std::isnan(x[j]) || std::isnan(mx) ? std::numeric_limits<Real>::quiet_NaN() : std::max(mx, x[j]);
            }
        }
        if (!any) {
            throw ShapeError("softmax_rows: row " + std::to_string(i) + " has no permitted entry");
        }
        Real total = 0;
        for (std::size_t j = 0; j < n; ++j) {
            if (mask.empty() || mask[i * n + j]) {
                out[i * n + j] = std::exp(x[j] - mx);
                total += out[i * n + j];
            }
        }
        for (std::size_t j = 0; j < n; ++j) {
            out[i * n + j] /= total;
        }
    }
    return make_result(a.shape(), std::move(out), {a}, [m, n](Node& self) {
        Node& an = *self.parents[0];
        if (!an.requires_grad) {
            return;
        }
        auto& g = an.ensure_grad();
        for (std::size_t i = 0; i < m; ++i) {
            const Real* y = self.value.data() + i * n;
            const Real* dy = self.grad.data() + i * n;
            Real dot = 0;
            for (std::size_t j = 0; j < n; ++j) {
                dot += y[j] * dy[j];
            }
            for (std::size_t j = 0; j < n; ++j) {
                g[i * n + j] += y[j] * (dy[j] - dot);
            }
        }
    });
}

Tensor layer_norm_rows(const Tensor& a, Real eps) {
    require_rank(a, 2, "layer_norm_rows");
    const std::size_t m = a.rows();
    const std::size_t n = a.cols();
    std::vector<Real> out(m * n);
    std::vector<Real> inv_std(m);
    for (std::size_t i = 0; i < m; ++i) {
        const Real* x = a.values().data() + i * n;
        Real mu = 0;
        for (std::size_t j = 0; j < n; ++j) {
            mu += x[j];
        }
        mu /= static_cast<Real>(n);
        Real var = 0;
        for (std::size_t j = 0; j < n; ++j) {
            var += (x[j] - mu) * (x[j] - mu);
        }
        var /= static_cast<Real>(n);
        inv_std[i] = Real{1} / std::sqrt(var + eps);
        for (std::size_t j = 0; j < n; ++j) {
            out[i * n + j] = (x[j] - mu) * inv_std[i];
        }
    }
    return make_result(a.shape(), std::move(out), {a}, [m, n, inv_std = std::move(inv_std)](Node& self) {
        Node& an = *self.parents[0];
        if (!an.requires_grad) {
            return;
        }
        auto& g = an.ensure_grad();
        const Real inv_n = Real{1} / static_cast<Real>(n);
        for (std::size_t i = 0; i < m; ++i) {
            const Real* xhat = self.value.data() + i * n;
            const Real* dy = self.grad.data() + i * n;
            Real mean_dy = 0;
            Real mean_dy_xhat = 0;
            for (std::size_t j = 0; j < n; ++j) {
                mean_dy += dy[j];
                mean_dy_xhat += dy[j] * xhat[j];
            }
            mean_dy *= inv_n;
            mean_dy_xhat *= inv_n;
            for (std::size_t j = 0; j < n; ++j) {
                g[i * n + j] += inv_std[i] * (dy[j] - mean_dy - xhat[j] * mean_dy_xhat);
            }
        }
    });
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
    if (parts.empty()) {
        throw ShapeError("concat_rows: nothing to concatenate");
    }
    const std::size_t n = parts.front().cols();
    std::size_t m = 0;
    std::vector<std::size_t> offsets;
    for (const auto& p : parts) {
        if (p.cols() != n) {
            throw ShapeError("concat_rows: column mismatch");
        }
        offsets.push_back(m * n);
        m += p.rows();
    }
    std::vector<Real> out;
    out.reserve(m * n);
    for (const auto& p : parts) {
        out.insert(out.end(), p.values().begin(), p.values().end());
    }
    return make_result({m, n}, std::move(out), parts, [offsets = std::move(offsets)](Node& self) {
        for (std::size_t i = 0; i < self.parents.size(); ++i) {
            const std::size_t off = offsets[i];
            accumulate(self, i, [&](std::size_t e) { return self.grad[off + e]; });
        }
    });
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
    if (parts.empty()) {
        throw ShapeError("concat_cols: nothing to concatenate");
    }
    const std::size_t m = parts.front().rows();
    std::size_t n = 0;
    std::vector<std::size_t> col_offsets;
    std::vector<std::size_t> widths;
    for (const auto& p : parts) {
        if (p.rows() != m) {
            throw ShapeError("concat_cols: row mismatch");
        }
        col_offsets.push_back(n);
        widths.push_back(p.cols());
        n += p.cols();
    }
    std::vector<Real> out(m * n);
    for (std::size_t pi = 0; pi < parts.size(); ++pi) {
        const auto vals = parts[pi].values();
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < widths[pi]; ++j) {
                out[i * n + col_offsets[pi] + j] = vals[i * widths[pi] + j];
            }
        }
    }
    return make_result({m, n}, std::move(out), parts,
                       [n, col_offsets = std::move(col_offsets), widths = std::move(widths)](Node& self) {
                           for (std::size_t pi = 0; pi < self.parents.size(); ++pi) {
                               const std::size_t w = widths[pi];
                               const std::size_t off = col_offsets[pi];
                               accumulate(self, pi, [&](std::size_t e) { return self.grad[(e / w) * n + off + e % w]; });
                           }
                       });
}

Tensor concat(const std::vector<Tensor>& parts) {
    if (parts.empty()) {
        throw ShapeError("concat: nothing to concatenate");
    }
    std::vector<Real> out;
    std::vector<std::size_t> offsets;
    for (const auto& p : parts) {
        require_rank(p, 1, "concat");
        offsets.push_back(out.size());
        out.insert(out.end(), p.values().begin(), p.values().end());
    }
    const std::size_t total = out.size();
    return make_result({total}, std::move(out), parts, [offsets = std::move(offsets)](Node& self) {
        for (std::size_t i = 0; i < self.parents.size(); ++i) {
            const std::size_t off = offsets[i];
            accumulate(self, i, [&](std::size_t e) { return self.grad[off + e]; });
        }
    });
}

Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t end) {
    require_rank(a, 2, "slice_rows");
    if (begin > end || end > a.rows()) {
        throw ShapeError("slice_rows: range out of bounds");
    }
    const std::size_t n = a.cols();
    std::vector<Real> out(a.values().begin() + static_cast<std::ptrdiff_t>(begin * n),
                          a.values().begin() + static_cast<std::ptrdiff_t>(end * n));
    return make_result({end - begin, n}, std::move(out), {a}, [off = begin * n](Node& self) {
        Node& an = *self.parents[0];
        if (!an.requires_grad) {
            return;
        }
        auto& g = an.ensure_grad();
        for (std::size_t e = 0; e < self.grad.size(); ++e) {
            g[off + e] += self.grad[e];
        }
    });
}

Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t end) {
    require_rank(a, 2, "slice_cols");
    if (begin > end || end > a.cols()) {
        throw ShapeError("slice_cols: range out of bounds");
    }
    const std::size_t m = a.rows();
    const std::size_t n = a.cols();
    const std::size_t w = end - begin;
    std::vector<Real> out(m * w);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < w; ++j) {
            out[i * w + j] = a.values()[i * n + begin + j];
        }
    }
    return make_result({m, w}, std::move(out), {a}, [m, n, w, begin](Node& self) {
        Node& an = *self.parents[0];
        if (!an.requires_grad) {
            return;
        }
        auto& g = an.ensure_grad();
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < w; ++j) {
                g[i * n + begin + j] += self.grad[i * w + j];
            }
        }
    });
}

Tensor gather_cols(const Tensor& a, std::span<const std::size_t> ids) {
    require_rank(a, 2, "gather_cols");
    const std::size_t m = a.rows();
    const std::size_t n = a.cols();
    const std::size_t w = ids.size();
    std::vector<std::size_t> idx(ids.begin(), ids.end());
    for (auto id : idx) {
        if (id >= n) {
            throw ShapeError("gather_cols: column index out of range");
        }
    }
    std::vector<Real> out(m * w);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < w; ++j) {
            out[i * w + j] = a.values()[i * n + idx[j]];
        }
    }
    return make_result({m, w}, std::move(out), {a}, [m, n, w, idx = std::move(idx)](Node& self) {
        Node& an = *self.parents[0];
        if (!an.requires_grad) {
            return;
        }
        auto& g = an.ensure_grad();
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < w; ++j) {
                g[i * n + idx[j]] += self.grad[i * w + j];
            }
        }
    });
}

Tensor gather_rows(const Tensor& table, std::span<const std::size_t> ids) {
    require_rank(table, 2, "gather_rows");
    const std::size_t n = table.cols();
    std::vector<std::size_t> idx(ids.begin(), ids.end());
    std::vector<Real> out;
    out.reserve(idx.size() * n);
    for (auto id : idx) {
        if (id >= table.rows()) {
            throw ShapeError("gather_rows: row index out of range");
        }
        const auto row = table.values().subspan(id * n, n);
        out.insert(out.end(), row.begin(), row.end());
    }
    const std::size_t m = idx.size();
    return make_result({m, n}, std::move(out), {table}, [n, idx = std::move(idx)](Node& self) {
        Node& tn = *self.parents[0];
        if (!tn.requires_grad) {
            return;
        }
        auto& g = tn.ensure_grad();
        for (std::size_t r = 0; r < idx.size(); ++r) {
            for (std::size_t j = 0; j < n; ++j) {
                g[idx[r] * n + j] += self.grad[r * n + j];
            }
        }
    });
}

Tensor reshape(const Tensor& a, Shape shape) {
    const std::size_t count = std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
    if (count != a.numel() || shape.size() > 3) {
        throw ShapeError("reshape: element count mismatch");
    }
    std::vector<Real> out(a.values().begin(), a.values().end());
    return make_result(std::move(shape), std::move(out), {a}, [](Node& self) {
        accumulate(self, 0, [&](std::size_t e) { return self.grad[e]; });
    });
}

Tensor sum(const Tensor& a) {
    Real total = 0;
    for (Real v : a.values()) {
        total += v;
    }
    return make_result({}, {total}, {a}, [](Node& self) {
        const Real g = self.grad[0];
        accumulate(self, 0, [&](std::size_t) { return g; });
    });
}

Tensor mean(const Tensor& a) {
    if (a.numel() == 0) {
        throw ShapeError("mean: empty tensor");
    }
    return scale(sum(a), Real{1} / static_cast<Real>(a.numel()));
}

Tensor mean_rows(const Tensor& a) {
    require_rank(a, 2, "mean_rows");
    const std::size_t m = a.rows();
    const std::size_t n = a.cols();
    if (m == 0) {
        throw ShapeError("mean_rows: no rows");
    }
    std::vector<double> sum(n, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            sum[j] += a.values()[i * n + j];
        }
    }
    std::vector<Real> out(n);
    for (std::size_t j = 0; j < n; ++j) {
        out[j] = static_cast<Real>(sum[j] / static_cast<double>(m));
    }
    return make_result({n}, std::move(out), {a}, [m, n](Node& self) {
        const Real inv = Real{1} / static_cast<Real>(m);
        accumulate(self, 0, [&](std::size_t e) { return self.grad[e % n] * inv; });
    });
}

Tensor mse(const Tensor& a, const Tensor& b) { return mean(square(sub(a, b))); }

}  // namespace polyglot::nn
