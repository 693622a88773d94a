#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "polyglot/layers.hpp"
#include "polyglot/matrix.hpp"

namespace polyglot {

struct ConditionConfig {
    std::size_t d_text = 8;
    std::size_t n_shape = 80;
    std::size_t d_style = 32;
    std::size_t d_audio = 16;
    std::size_t width = 64;
    std::size_t n_steps = 50;
};

/// Live condition values plus the classifier-free dropout flags.
struct ConditionBundle {
    nn::Tensor beta;
    nn::Tensor t_hat;
    nn::Tensor style;
    bool drop_audio = false;
    bool drop_cond = false;  // drops t_hat and style together
};

/// c = L1(t_hat (+) beta (+) S) + L2(emb(n)) with learned null embeddings.
struct ConditionFuser {
    ConditionConfig config;
    nn::Linear l1;
    nn::Linear l2;
    nn::Tensor null_audio;
    nn::Tensor null_text;
    nn::Tensor null_style;

    static ConditionFuser create(const ConditionConfig& config, Rng& rng);

    /// Applies the drop flags, then fuses. Throws if n is outside [0, N].
    [[nodiscard]] nn::Tensor fuse(const ConditionBundle& bundle, std::size_t n) const;
    [[nodiscard]] nn::Tensor fuse(const nn::Tensor& t_hat, const nn::Tensor& beta, const nn::Tensor& style,
                                  std::size_t n) const;
    /// Either the live audio rows or the null row broadcast to the same length.
    [[nodiscard]] nn::Tensor audio_or_null(const nn::Tensor& audio, bool drop) const;

    void collect(nn::ParamList& out, const std::string& prefix) const;
};

struct SyntheticAudioSpec {
    std::uint64_t seed = 0;
    std::size_t d_audio = 16;
    std::size_t d_text = 8;
    std::size_t n_components = 4;
    std::size_t language = 0;
    /// Shared across a dataset: fixes the latent-to-feature mixing and language bases.
    std::uint64_t world_seed = 1;
};

struct SyntheticFeatures {
    Matrix audio;                      // T x d_audio
    std::vector<float> t_hat;          // d_text
    Matrix latent;                     // T x n_components, the planted signal
    std::vector<double> frequencies;   // cycles per frame, one per component
    std::vector<double> phases;
    Matrix mixing;                     // n_components x d_audio
};

/// Latent z_t[j] = sin(2 pi f_j t + phi_j), audio = z * mixing. t_hat is a
/// language base vector plus a small per-sentence term.
SyntheticFeatures synthetic_features(const SyntheticAudioSpec& spec, std::size_t frames);

struct LoadedFeatures {
    Matrix audio;
    std::vector<float> t_hat;
};

/// Reads `audio_feats` and `t_hat` arrays; checks fps against `expected_fps`
/// when the audio file carries an `fps` entry.
LoadedFeatures load_features(const std::filesystem::path& audio_path, const std::filesystem::path& t_hat_path,
                             double expected_fps = 25.0);

}  // namespace polyglot
