#include "polyglot/denoiser.hpp"

#include <string>

#include "polyglot/errors.hpp"
#include "polyglot/numerics/ops.hpp"

namespace polyglot {

using nn::Tensor;

std::vector<std::uint8_t> build_alignment_mask(std::size_t context, std::size_t window, std::size_t radius,
                                               bool causal) {
    const std::size_t n = context + window;
    std::vector<std::uint8_t> mask(n * n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const std::size_t gap = i > j ? i - j : j - i;
            const bool ok = causal ? (j <= i && gap <= radius) : gap <= radius;
            mask[i * n + j] = ok ? 1 : 0;
        }
    }
    return mask;
}

Denoiser Denoiser::create(const DenoiserConfig& config, Rng& rng) {
    if (config.window == 0 || config.context >= config.window) {
        throw ShapeError("DenoiserConfig: need 0 <= T_p < T_w");
    }
    Denoiser d;
    d.config = config;
    d.input = nn::Linear::create(config.n_expr, config.width, rng);
    d.audio_proj = nn::Linear::create(config.d_audio, config.width, rng);
    for (std::size_t i = 0; i < config.layers; ++i) {
        d.blocks.push_back(nn::DecoderBlock::create(config.width, config.heads, rng));
    }
    d.final_norm = nn::LayerNorm::create(config.width);
    d.output = nn::Linear::create(config.width, config.n_expr, rng);
    d.start_audio = Tensor::parameter({config.context, config.d_audio},
                                      std::vector<nn::Real>(config.context * config.d_audio, nn::Real{0}));
    d.start_motion = Tensor::parameter({config.context, config.n_expr},
                                       std::vector<nn::Real>(config.context * config.n_expr, nn::Real{0}));
    d.mask = build_alignment_mask(config.context, config.window, config.radius, config.causal);
    return d;
}

Tensor Denoiser::forward(const Tensor& prev_clean, const Tensor& noisy, const Tensor& prev_audio,
                         const Tensor& cur_audio, const Tensor& c) const {
    const auto& cfg = config;
    const auto check = [](const Tensor& t, std::size_t r, std::size_t cols, const char* what) {
        if (t.rank() != 2 || t.rows() != r || t.cols() != cols) {
            throw ShapeError(std::string("td_forward: bad shape for ") + what);
        }
    };
    check(prev_clean, cfg.context, cfg.n_expr, "prev_clean");
    check(noisy, cfg.window, cfg.n_expr, "noisy");
    check(prev_audio, cfg.context, cfg.d_audio, "prev_audio");
    check(cur_audio, cfg.window, cfg.d_audio, "cur_audio");
    if (c.numel() != cfg.width) {
        throw ShapeError("td_forward: condition width mismatch");
    }
    const std::size_t tokens = cfg.context + cfg.window;
    const Tensor pe = nn::sinusoidal_positions(tokens, cfg.width);

    const Tensor motion = cfg.context == 0 ? noisy : nn::concat_rows({prev_clean, noisy});
    Tensor x = nn::add(nn::add_rowvec(input(motion), nn::reshape(c, {cfg.width})), pe);

    const Tensor audio = cfg.context == 0 ? cur_audio : nn::concat_rows({prev_audio, cur_audio});
    const Tensor memory = nn::add(audio_proj(audio), pe);

    for (const auto& block : blocks) {
        x = block(x, memory, mask);
    }
    return output(final_norm(x));
}

void Denoiser::collect(nn::ParamList& out, const std::string& prefix) const {
    input.collect(out, prefix + ".input");
    audio_proj.collect(out, prefix + ".audio_proj");
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        blocks[i].collect(out, prefix + ".block" + std::to_string(i));
    }
    final_norm.collect(out, prefix + ".final_norm");
    output.collect(out, prefix + ".output");
    out.push_back({prefix + ".start_audio", start_audio});
    out.push_back({prefix + ".start_motion", start_motion});
}

}  // namespace polyglot
