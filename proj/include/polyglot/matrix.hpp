#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

#include "polyglot/errors.hpp"

namespace polyglot {

/// Dense row-major float32 matrix with value semantics. Used for data that
/// crosses module and file boundaries (expression sequences, audio features,
/// meshes); differentiable code works on nn::Tensor instead.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<float> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, float fill = 0.0F) : rows(r), cols(c), data(r * c, fill) {}
    Matrix(std::size_t r, std::size_t c, std::vector<float> values) : rows(r), cols(c), data(std::move(values)) {
        if (data.size() != r * c) {
            throw ShapeError("Matrix: value count does not match rows*cols");
        }
    }

    float& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    float operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    std::span<float> row(std::size_t r) { return {data.data() + r * cols, cols}; }
    [[nodiscard]] std::span<const float> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

    [[nodiscard]] bool empty() const noexcept { return rows == 0 || cols == 0; }

    /// Rows [begin, end) as a new matrix.
    [[nodiscard]] Matrix slice_rows(std::size_t begin, std::size_t end) const {
        if (begin > end || end > rows) {
            throw ShapeError("Matrix::slice_rows: range out of bounds");
        }
        Matrix out(end - begin, cols);
        std::copy(data.begin() + static_cast<std::ptrdiff_t>(begin * cols),
                  data.begin() + static_cast<std::ptrdiff_t>(end * cols), out.data.begin());
        return out;
    }

    friend bool operator==(const Matrix&, const Matrix&) = default;
};

/// Stacks `top` over `bottom`; column counts must match.
inline Matrix vstack(const Matrix& top, const Matrix& bottom) {
    if (top.cols != bottom.cols) {
        throw ShapeError("vstack: column mismatch");
    }
    Matrix out(top.rows + bottom.rows, top.cols);
    std::copy(top.data.begin(), top.data.end(), out.data.begin());
    std::copy(bottom.data.begin(), bottom.data.end(), out.data.begin() + static_cast<std::ptrdiff_t>(top.data.size()));
    return out;
}

/// Returns a `rows`-row matrix; missing trailing rows repeat the last row of `m`.
inline Matrix pad_rows_edge(const Matrix& m, std::size_t rows) {
    if (m.rows == 0) {
        throw ShapeError("pad_rows_edge: empty matrix");
    }
    Matrix out(rows, m.cols);
    for (std::size_t r = 0; r < rows; ++r) {
        const auto src = m.row(std::min(r, m.rows - 1));
        std::copy(src.begin(), src.end(), out.row(r).begin());
    }
    return out;
}

}  // namespace polyglot
