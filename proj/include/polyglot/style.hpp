#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "polyglot/layers.hpp"
#include "polyglot/matrix.hpp"

namespace polyglot {

struct StyleConfig {
    std::size_t n_expr = 53;
    std::size_t width = 512;
    std::size_t layers = 2;
    std::size_t heads = 4;
};

/// E_S: per-frame temporal features and the pooled global embedding.
struct StyleEncoder {
    StyleConfig config;
    nn::Linear input;
    std::vector<nn::EncoderBlock> blocks;
    nn::Linear pool_proj;  // 2h -> h, no bias

    static StyleEncoder create(const StyleConfig& config, Rng& rng);

    /// [T, k] -> [T, h]
    [[nodiscard]] nn::Tensor encode_frames(const nn::Tensor& expressions) const;
    /// [T, h] -> [h]
    [[nodiscard]] nn::Tensor pool(const nn::Tensor& features) const;
    [[nodiscard]] nn::Tensor embed(const nn::Tensor& expressions) const { return pool(encode_frames(expressions)); }
    /// Embedding of a whole sequence without recording a graph.
    [[nodiscard]] std::vector<float> embed(const Matrix& expressions) const;

    void collect(nn::ParamList& out, const std::string& prefix) const;
};

/// D_S: reconstructs expressions from f_{1:T} with S broadcast to every frame.
struct StyleDecoder {
    StyleConfig config;
    nn::Linear input;  // 2h -> h
    std::vector<nn::EncoderBlock> blocks;
    nn::Linear output;  // h -> k

    static StyleDecoder create(const StyleConfig& config, Rng& rng);
    [[nodiscard]] nn::Tensor decode(const nn::Tensor& features, const nn::Tensor& style) const;
    void collect(nn::ParamList& out, const std::string& prefix) const;
};

struct StyleAutoencoder {
    StyleConfig config;
    StyleEncoder encoder;
    StyleDecoder decoder;

    static StyleAutoencoder create(const StyleConfig& config, std::uint64_t seed);
    [[nodiscard]] nn::Tensor reconstruct(const nn::Tensor& expressions) const;
    [[nodiscard]] nn::ParamList params() const;
};

/// mean(f) concatenated with the shifted population std, [2h].
/// The std shift makes a frame-constant input map to exactly 0.
nn::Tensor mean_std_stats(const nn::Tensor& features);

inline constexpr double kStyleStdEpsilon = 1e-5;

struct StyleTrainConfig {
    std::size_t epochs = 200;
    std::size_t steps = 0;  // overrides epochs when nonzero
    std::size_t batch = 128;
    std::size_t window = 75;
    double learning_rate = 1e-4;
    std::uint64_t seed = 0;
};

struct StyleTrainResult {
    std::vector<double> losses;
};

/// MSE reconstruction training on random windows of the given sequences.
/// `on_step(step, loss)` is called after every update when set.
StyleTrainResult train_style_autoencoder(StyleAutoencoder& model, const std::vector<Matrix>& sequences,
                                         const StyleTrainConfig& config,
                                         const std::function<void(std::size_t, double)>& on_step = {});

/// Mean squared reconstruction error over whole sequences, no graph.
double style_reconstruction_mse(const StyleAutoencoder& model, const std::vector<Matrix>& sequences);

}  // namespace polyglot
