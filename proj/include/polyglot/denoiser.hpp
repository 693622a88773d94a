#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "polyglot/layers.hpp"

namespace polyglot {

struct DenoiserConfig {
    std::size_t n_expr = 53;
    std::size_t d_audio = 16;
    std::size_t width = 64;
    std::size_t layers = 2;
    std::size_t heads = 2;
    std::size_t window = 16;   // T_w
    std::size_t context = 4;   // T_p
    std::size_t radius = 1;
    bool causal = false;
};

/// Row-major (T_p+T_w)^2 mask; entry (i, j) = 1 iff |i - j| <= r
/// (or, when causal, i - r <= j <= i).
std::vector<std::uint8_t> build_alignment_mask(std::size_t context, std::size_t window, std::size_t radius,
                                               bool causal = false);

/// Transformer decoder over [prev ; current] motion tokens with cross-attention
/// to the matching audio frames.
struct Denoiser {
    DenoiserConfig config;
    nn::Linear input;       // L_I: k -> h
    nn::Linear audio_proj;  // d_a -> h
    std::vector<nn::DecoderBlock> blocks;
    nn::LayerNorm final_norm;
    nn::Linear output;      // L_O: h -> k
    nn::Tensor start_audio;  // A_start, T_p x d_a
    nn::Tensor start_motion; // M_start, T_p x k
    std::vector<std::uint8_t> mask;

    static Denoiser create(const DenoiserConfig& config, Rng& rng);

    /// Returns the (T_p+T_w) x k clean estimate.
    [[nodiscard]] nn::Tensor forward(const nn::Tensor& prev_clean, const nn::Tensor& noisy,
                                     const nn::Tensor& prev_audio, const nn::Tensor& cur_audio,
                                     const nn::Tensor& c) const;

    void collect(nn::ParamList& out, const std::string& prefix) const;
};

}  // namespace polyglot
