#pragma once

#include <cstddef>
#include <span>

#include "polyglot/numerics/tensor.hpp"
#include "polyglot/style.hpp"

// Training objective. Every squared norm is a mean over elements.
namespace polyglot {

struct LossWeights {
    double simple = 10.0;
    double mouth = 10.0;
    double style = 1.0;
    double vertex = 200.0;
    double velocity = 100.0;
    double smooth = 100.0;
};

/// mse(pred, gt) + lambda_mouth * mse over the mouth columns.
nn::Tensor loss_simple(const nn::Tensor& pred, const nn::Tensor& gt, std::span<const std::size_t> mouth_ids,
                       double lambda_mouth);

/// mse(pool(E_S(pred)), reference). The encoder is used as a fixed function:
/// callers freeze its parameters, and the reference is a constant.
nn::Tensor loss_style(const StyleEncoder& encoder, const nn::Tensor& pred, const nn::Tensor& reference);

struct GeometricLosses {
    nn::Tensor vertex;
    nn::Tensor velocity;
    nn::Tensor smooth;
};

/// [T, 3N] predicted and ground-truth vertices. Velocity needs T >= 2 and
/// smoothness T >= 3; shorter sequences give 0 for those terms.
GeometricLosses loss_geometric(const nn::Tensor& pred_vertices, const nn::Tensor& gt_vertices);

/// First temporal difference, [T-1, D].
nn::Tensor temporal_difference(const nn::Tensor& x);

struct LossParts {
    nn::Tensor simple;
    nn::Tensor style;
    nn::Tensor vertex;
    nn::Tensor velocity;
    nn::Tensor smooth;
};

/// Weighted sum; undefined parts count as 0.
nn::Tensor total_loss(const LossParts& parts, const LossWeights& weights);

}  // namespace polyglot
