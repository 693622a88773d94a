#include "polyglot/conditioning.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "polyglot/errors.hpp"
#include "polyglot/numerics/ops.hpp"
#include "polyglot/paf.hpp"

namespace polyglot {

using nn::Tensor;

namespace {

Tensor small_vector(std::size_t n, Rng& rng) {
    std::vector<nn::Real> v(n);
    for (auto& x : v) {
        x = static_cast<nn::Real>(0.02 * rng.normal());
    }
    return Tensor::parameter({n}, std::move(v));
}

}  // namespace

ConditionFuser ConditionFuser::create(const ConditionConfig& config, Rng& rng) {
    ConditionFuser f;
    f.config = config;
    f.l1 = nn::Linear::create(config.d_text + config.n_shape + config.d_style, config.width, rng);
    f.l2 = nn::Linear::create(config.width, config.width, rng);
    f.null_audio = small_vector(config.d_audio, rng);
    f.null_text = small_vector(config.d_text, rng);
    f.null_style = small_vector(config.d_style, rng);
    return f;
}

Tensor ConditionFuser::fuse(const Tensor& t_hat, const Tensor& beta, const Tensor& style, std::size_t n) const {
    if (n > config.n_steps) {
        throw ShapeError("fuse_condition: step " + std::to_string(n) + " outside [0, " +
                         std::to_string(config.n_steps) + "]");
    }
    if (t_hat.numel() != config.d_text || beta.numel() != config.n_shape || style.numel() != config.d_style) {
        throw ShapeError("fuse_condition: condition widths do not match L1");
    }
    const Tensor joint = nn::concat({nn::reshape(t_hat, {t_hat.numel()}), nn::reshape(beta, {beta.numel()}),
                                     nn::reshape(style, {style.numel()})});
    const Tensor step = l2.apply_vec(nn::sinusoidal_embedding(static_cast<double>(n), config.width));
    return nn::add(l1.apply_vec(joint), step);
}

Tensor ConditionFuser::fuse(const ConditionBundle& bundle, std::size_t n) const {
    return fuse(bundle.drop_cond ? null_text : bundle.t_hat, bundle.beta, bundle.drop_cond ? null_style : bundle.style, n);
}

Tensor ConditionFuser::audio_or_null(const Tensor& audio, bool drop) const {
    if (!drop) {
        return audio;
    }
    return nn::broadcast_rows(null_audio, audio.rows());
}

void ConditionFuser::collect(nn::ParamList& out, const std::string& prefix) const {
    l1.collect(out, prefix + ".l1");
    l2.collect(out, prefix + ".l2");
    out.push_back({prefix + ".null_audio", null_audio});
    out.push_back({prefix + ".null_text", null_text});
    out.push_back({prefix + ".null_style", null_style});
}

SyntheticFeatures synthetic_features(const SyntheticAudioSpec& spec, std::size_t frames) {
    if (frames == 0) {
        throw ShapeError("synthetic_features: T must be at least 1");
    }
    const std::size_t L = spec.n_components;
    SyntheticFeatures out;
    Rng world(spec.world_seed, 0xA0D10);
    out.mixing = Matrix(L, spec.d_audio);
    for (auto& v : out.mixing.data) {
        v = static_cast<float>(world.normal() / std::sqrt(static_cast<double>(L)));
    }
    Rng lang(spec.world_seed, 0x1A46 + spec.language);
    std::vector<double> base(spec.d_text);
    for (auto& v : base) {
        v = lang.normal();
    }

    Rng rng(spec.seed, 0xFEA7);
    out.latent = Matrix(frames, L);
    out.frequencies.resize(L);
    out.phases.resize(L);
    for (std::size_t j = 0; j < L; ++j) {
        // Distinct bands keep the components separable.
        const double lo = 0.02 + 0.05 * static_cast<double>(j);
        out.frequencies[j] = lo + 0.04 * rng.uniform();
        out.phases[j] = 2.0 * std::numbers::pi * rng.uniform();
    }
    for (std::size_t t = 0; t < frames; ++t) {
        for (std::size_t j = 0; j < L; ++j) {
            out.latent(t, j) = static_cast<float>(
                std::sin(2.0 * std::numbers::pi * out.frequencies[j] * static_cast<double>(t) + out.phases[j]));
        }
    }
    out.audio = Matrix(frames, spec.d_audio);
    for (std::size_t t = 0; t < frames; ++t) {
        for (std::size_t d = 0; d < spec.d_audio; ++d) {
            double acc = 0.0;
            for (std::size_t j = 0; j < L; ++j) {
                acc += static_cast<double>(out.latent(t, j)) * out.mixing(j, d);
            }
            out.audio(t, d) = static_cast<float>(acc);
        }
    }
    out.t_hat.resize(spec.d_text);
    for (std::size_t i = 0; i < spec.d_text; ++i) {
        out.t_hat[i] = static_cast<float>(base[i] + 0.1 * rng.normal());
    }
    return out;
}

LoadedFeatures load_features(const std::filesystem::path& audio_path, const std::filesystem::path& t_hat_path,
                             double expected_fps) {
    const PafFile audio_file = PafFile::read(audio_path);
    const PafArray& audio = audio_file.get("audio_feats");
    if (audio.dims.size() != 2) {
        throw DataError("load_features: audio_feats must be rank 2");
    }
    if (audio_file.contains("fps")) {
        const auto& fps = audio_file.get("fps").values;
        if (fps.size() != 1 || std::abs(fps[0] - expected_fps) > 1e-6) {
            throw DataError("load_features: audio fps does not match motion fps");
        }
    }
    const PafFile text_file = t_hat_path == audio_path ? audio_file : PafFile::read(t_hat_path);
    const PafArray& t_hat = text_file.get("t_hat");
    if (t_hat.dims.size() != 1) {
        throw DataError("load_features: t_hat must be rank 1");
    }
    return {audio.to_matrix(), t_hat.values};
}

}  // namespace polyglot
