#include "polyglot/numerics/tensor.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <unordered_set>

namespace polyglot::nn {

namespace {

thread_local bool t_grad_enabled = true;

std::size_t shape_numel(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

}  // namespace

NoGradGuard::NoGradGuard() : previous_(t_grad_enabled) { t_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { t_grad_enabled = previous_; }

bool grad_enabled() noexcept { return t_grad_enabled; }

Tensor::Tensor(Shape shape, Real fill) : node_(std::make_shared<detail::Node>()) {
    if (shape.size() > 3) {
        throw ShapeError("Tensor: rank above 3 is not supported");
    }
    node_->value.assign(shape_numel(shape), fill);
    node_->shape = std::move(shape);
}

Tensor::Tensor(Shape shape, std::vector<Real> values) : node_(std::make_shared<detail::Node>()) {
    if (shape.size() > 3) {
        throw ShapeError("Tensor: rank above 3 is not supported");
    }
    if (values.size() != shape_numel(shape)) {
        throw ShapeError("Tensor: value count does not match shape");
    }
    node_->shape = std::move(shape);
    node_->value = std::move(values);
}

Tensor Tensor::scalar(Real v) { return Tensor(Shape{}, std::vector<Real>{v}); }

Tensor Tensor::parameter(Shape shape, std::vector<Real> values) {
    Tensor t(std::move(shape), std::move(values));
    t.node_->requires_grad = true;
    return t;
}

Tensor Tensor::from_matrix(const Matrix& m) {
    return Tensor(Shape{m.rows, m.cols}, std::vector<Real>(m.data.begin(), m.data.end()));
}

Tensor Tensor::from_vector(std::span<const float> v) {
    return Tensor(Shape{v.size()}, std::vector<Real>(v.begin(), v.end()));
}

std::size_t Tensor::rows() const {
    if (rank() != 2) {
        throw ShapeError("Tensor::rows: tensor is not 2-D");
    }
    return node_->shape[0];
}

std::size_t Tensor::cols() const {
    if (rank() != 2) {
        throw ShapeError("Tensor::cols: tensor is not 2-D");
    }
    return node_->shape[1];
}

Real Tensor::item() const {
    if (numel() != 1) {
        throw ShapeError("Tensor::item: tensor has more than one element");
    }
    return node_->value[0];
}

void Tensor::set_requires_grad(bool on) {
    if (!node_->parents.empty() || node_->backward) {
        throw std::logic_error("set_requires_grad: only leaf tensors can be toggled");
    }
    node_->requires_grad = on;
}

std::span<const Real> Tensor::grad() const {
    if (!has_grad()) {
        return {};
    }
    return node_->grad;
}

void Tensor::zero_grad() {
    if (has_grad()) {
        std::fill(node_->grad.begin(), node_->grad.end(), Real{0});
    }
}

void Tensor::backward() const {
    if (!node_ || numel() != 1) {
        throw ShapeError("backward: loss must be a scalar");
    }
    if (!node_->requires_grad) {
        throw std::logic_error("backward: loss does not depend on any parameter");
    }

    // Iterative post-order DFS gives a topological order (parents first).
    std::vector<detail::Node*> order;
    std::unordered_set<detail::Node*> visited;
    std::vector<std::pair<detail::Node*, std::size_t>> stack;
    stack.emplace_back(node_.get(), 0);
    visited.insert(node_.get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            detail::Node* parent = node->parents[next++].get();
            if (parent->requires_grad && visited.insert(parent).second) {
                stack.emplace_back(parent, 0);
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    // Interior gradients are recomputed from scratch on every sweep.
    for (detail::Node* n : order) {
        if (n->backward) {
            n->grad.assign(n->value.size(), Real{0});
        }
    }
    node_->ensure_grad()[0] += Real{1};

    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        if ((*it)->backward) {
            (*it)->backward(**it);
        }
    }
}

Tensor Tensor::detach() const {
    return Tensor(node_->shape, node_->value);
}

Matrix Tensor::to_matrix() const {
    if (rank() != 2) {
        throw ShapeError("Tensor::to_matrix: tensor is not 2-D");
    }
    return Matrix(rows(), cols(), to_floats());
}

std::vector<float> Tensor::to_floats() const {
    return {node_->value.begin(), node_->value.end()};
}

Tensor Tensor::from_node(std::shared_ptr<detail::Node> node) {
    Tensor t;
    t.node_ = std::move(node);
    return t;
}

namespace detail {

Tensor make_result(Shape shape, std::vector<Real> value, std::vector<Tensor> parents,
                   std::function<void(Node&)> backward) {
    auto node = std::make_shared<Node>();
    node->shape = std::move(shape);
    node->value = std::move(value);
    const bool needs = t_grad_enabled && std::any_of(parents.begin(), parents.end(), [](const Tensor& p) {
        return p.defined() && p.requires_grad();
    });
    if (needs) {
        node->requires_grad = true;
        node->parents.reserve(parents.size());
        for (auto& p : parents) {
            node->parents.push_back(p.node());
        }
        node->backward = std::move(backward);
    }
    return Tensor::from_node(std::move(node));
}

}  // namespace detail

}  // namespace polyglot::nn
