#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "polyglot/matrix.hpp"

namespace polyglot::nn {

#ifdef POLYGLOT_REAL_DOUBLE
using Real = double;
#else
using Real = float;
#endif

using Shape = std::vector<std::size_t>;

namespace detail {

struct Node {
    Shape shape;
    std::vector<Real> value;
    std::vector<Real> grad;  // allocated on first use
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    // Propagates this node's grad into its parents. Empty for leaves.
    std::function<void(Node&)> backward;

    std::vector<Real>& ensure_grad() {
        if (grad.size() != value.size()) {
            grad.assign(value.size(), Real{0});
        }
        return grad;
    }
};

}  // namespace detail

/// Disables graph recording on the current thread while alive.
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool previous_;
};

[[nodiscard]] bool grad_enabled() noexcept;

/// Handle to a node of the computation graph. Copies share the node, like
/// framework tensors; use detach() or clone() for an independent value.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, Real fill = Real{0});
    Tensor(Shape shape, std::vector<Real> values);

    static Tensor scalar(Real v);
    /// Leaf tensor that records gradients.
    static Tensor parameter(Shape shape, std::vector<Real> values);
    static Tensor from_matrix(const Matrix& m);
    static Tensor from_vector(std::span<const float> v);

    [[nodiscard]] bool defined() const noexcept { return node_ != nullptr; }
    [[nodiscard]] const Shape& shape() const { return node_->shape; }
    [[nodiscard]] std::size_t rank() const { return node_->shape.size(); }
    [[nodiscard]] std::size_t numel() const { return node_->value.size(); }
    [[nodiscard]] std::size_t dim(std::size_t i) const { return node_->shape.at(i); }
    [[nodiscard]] std::size_t rows() const;
    [[nodiscard]] std::size_t cols() const;

    [[nodiscard]] std::span<const Real> values() const { return node_->value; }
    /// Direct write access; intended for parameters and optimizer updates.
    [[nodiscard]] std::span<Real> mutable_values() { return node_->value; }
    [[nodiscard]] Real item() const;
    [[nodiscard]] Real at(std::size_t i) const { return node_->value.at(i); }
    [[nodiscard]] Real at(std::size_t r, std::size_t c) const { return node_->value.at(r * cols() + c); }

    [[nodiscard]] bool requires_grad() const { return node_->requires_grad; }
    void set_requires_grad(bool on);
    [[nodiscard]] bool has_grad() const { return node_->grad.size() == node_->value.size(); }
    /// Empty span when no gradient has been accumulated yet.
    [[nodiscard]] std::span<const Real> grad() const;
    [[nodiscard]] std::span<Real> mutable_grad() { return node_->ensure_grad(); }
    void zero_grad();

    /// Reverse sweep from a scalar. Leaf gradients accumulate across calls.
    void backward() const;

    /// Same values, no graph history, independent storage.
    [[nodiscard]] Tensor detach() const;
    [[nodiscard]] Matrix to_matrix() const;
    [[nodiscard]] std::vector<float> to_floats() const;

    [[nodiscard]] const std::shared_ptr<detail::Node>& node() const noexcept { return node_; }
    static Tensor from_node(std::shared_ptr<detail::Node> node);

    [[nodiscard]] bool same_node(const Tensor& other) const noexcept { return node_ == other.node_; }

private:
    std::shared_ptr<detail::Node> node_;
};

namespace detail {

/// Builds the result node of an op. Parents and the backward closure are kept
/// only when recording is on and some parent needs gradients.
Tensor make_result(Shape shape, std::vector<Real> value, std::vector<Tensor> parents,
                   std::function<void(Node&)> backward);

}  // namespace detail

}  // namespace polyglot::nn
