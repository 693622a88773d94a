#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "polyglot/numerics/rng.hpp"
#include "polyglot/numerics/tensor.hpp"

// Transformer building blocks shared by the style autoencoder and the denoiser.
namespace polyglot::nn {

struct NamedTensor {
    std::string name;
    Tensor tensor;
};
using ParamList = std::vector<NamedTensor>;

std::vector<Tensor> tensors_of(const ParamList& params);
void set_requires_grad(const ParamList& params, bool on);
/// Copies values pairwise; both lists must have the same names and shapes.
void copy_values(const ParamList& from, const ParamList& to);

/// y = x W + b, W stored [in, out].
struct Linear {
    Tensor weight;
    Tensor bias;  // undefined when the layer has no bias

    static Linear create(std::size_t in, std::size_t out, Rng& rng, bool with_bias = true);
    [[nodiscard]] Tensor operator()(const Tensor& x) const;
    /// Applies the layer to a 1-D vector.
    [[nodiscard]] Tensor apply_vec(const Tensor& v) const;
    [[nodiscard]] std::size_t in_features() const { return weight.dim(0); }
    [[nodiscard]] std::size_t out_features() const { return weight.dim(1); }
    void collect(ParamList& out, const std::string& prefix) const;
};

struct LayerNorm {
    Tensor gamma;
    Tensor beta;

    static LayerNorm create(std::size_t width);
    [[nodiscard]] Tensor operator()(const Tensor& x) const;
    void collect(ParamList& out, const std::string& prefix) const;
};

struct MultiHeadAttention {
    Linear query;
    Linear key;
    Linear value;
    Linear output;
    std::size_t heads = 1;

    static MultiHeadAttention create(std::size_t width, std::size_t heads, Rng& rng);
    /// `mask` is [queries, keys] row-major, 1 = attend; empty = unrestricted.
    [[nodiscard]] Tensor operator()(const Tensor& queries, const Tensor& memory,
                                    std::span<const std::uint8_t> mask = {}) const;
    void collect(ParamList& out, const std::string& prefix) const;
};

struct FeedForward {
    Linear up;
    Linear down;

    static FeedForward create(std::size_t width, std::size_t hidden, Rng& rng);
    [[nodiscard]] Tensor operator()(const Tensor& x) const;
    void collect(ParamList& out, const std::string& prefix) const;
};

/// Pre-norm self-attention + feed-forward block.
struct EncoderBlock {
    LayerNorm norm_attn;
    MultiHeadAttention attn;
    LayerNorm norm_ff;
    FeedForward ff;

    static EncoderBlock create(std::size_t width, std::size_t heads, Rng& rng);
    [[nodiscard]] Tensor operator()(const Tensor& x) const;
    void collect(ParamList& out, const std::string& prefix) const;
};

/// Pre-norm self-attention, masked cross-attention, feed-forward.
struct DecoderBlock {
    LayerNorm norm_self;
    MultiHeadAttention self_attn;
    LayerNorm norm_cross;
    MultiHeadAttention cross_attn;
    LayerNorm norm_ff;
    FeedForward ff;

    static DecoderBlock create(std::size_t width, std::size_t heads, Rng& rng);
    [[nodiscard]] Tensor operator()(const Tensor& x, const Tensor& memory,
                                    std::span<const std::uint8_t> cross_mask) const;
    void collect(ParamList& out, const std::string& prefix) const;
};

/// Fixed sinusoidal encoding, [length, width] (sin on even, cos on odd columns).
Tensor sinusoidal_positions(std::size_t length, std::size_t width);
/// Sinusoidal encoding of a single scalar position, [width].
Tensor sinusoidal_embedding(double position, std::size_t width);

}  // namespace polyglot::nn
