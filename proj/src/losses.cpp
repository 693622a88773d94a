#include "polyglot/losses.hpp"

#include "polyglot/errors.hpp"
#include "polyglot/numerics/ops.hpp"

namespace polyglot {

using nn::Tensor;

namespace {

void require_same(const Tensor& a, const Tensor& b, const char* what) {
    if (a.shape() != b.shape()) {
        throw ShapeError(std::string(what) + ": shape mismatch");
    }
}

}  // namespace

Tensor loss_simple(const Tensor& pred, const Tensor& gt, std::span<const std::size_t> mouth_ids, double lambda_mouth) {
    require_same(pred, gt, "loss_simple");
    const Tensor full = nn::mse(pred, gt);
    if (mouth_ids.empty() || lambda_mouth == 0.0) {
        return full;
    }
    const Tensor mouth = nn::mse(nn::gather_cols(pred, mouth_ids), nn::gather_cols(gt, mouth_ids));
    return nn::add(full, nn::scale(mouth, static_cast<nn::Real>(lambda_mouth)));
}

Tensor loss_style(const StyleEncoder& encoder, const Tensor& pred, const Tensor& reference) {
    const Tensor s = encoder.embed(pred);
    if (s.numel() != reference.numel()) {
        throw ShapeError("loss_style: reference width mismatch");
    }
    return nn::mse(s, nn::reshape(reference.detach(), s.shape()));
}

Tensor temporal_difference(const Tensor& x) {
    const std::size_t T = x.rows();
    if (T < 2) {
        throw ShapeError("temporal_difference: need at least two frames");
    }
    return nn::sub(nn::slice_rows(x, 1, T), nn::slice_rows(x, 0, T - 1));
}

GeometricLosses loss_geometric(const Tensor& pred_vertices, const Tensor& gt_vertices) {
    require_same(pred_vertices, gt_vertices, "loss_geometric");
    GeometricLosses out;
    out.vertex = nn::mse(pred_vertices, gt_vertices);
    const std::size_t T = pred_vertices.rows();
    if (T >= 2) {
        out.velocity = nn::mse(temporal_difference(pred_vertices), temporal_difference(gt_vertices));
    } else {
        out.velocity = Tensor::scalar(0);
    }
    if (T >= 3) {
        out.smooth = nn::mean(nn::square(temporal_difference(temporal_difference(pred_vertices))));
    } else {
        out.smooth = Tensor::scalar(0);
    }
    return out;
}

Tensor total_loss(const LossParts& parts, const LossWeights& weights) {
    Tensor acc = Tensor::scalar(0);
    const auto term = [&acc](const Tensor& part, double w) {
        if (part.defined() && w != 0.0) {
            acc = nn::add(acc, nn::scale(nn::reshape(part, {}), static_cast<nn::Real>(w)));
        }
    };
    term(parts.simple, weights.simple);
    term(parts.style, weights.style);
    term(parts.vertex, weights.vertex);
    term(parts.velocity, weights.velocity);
    term(parts.smooth, weights.smooth);
    return acc;
}

}  // namespace polyglot
