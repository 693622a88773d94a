#include "polyglot/style.hpp"

#include <cmath>
#include <string>

#include "polyglot/errors.hpp"
#include "polyglot/numerics/adam.hpp"
#include "polyglot/numerics/ops.hpp"

namespace polyglot {

using nn::Tensor;

namespace {

std::vector<nn::EncoderBlock> make_blocks(const StyleConfig& config, Rng& rng) {
    std::vector<nn::EncoderBlock> blocks;
    blocks.reserve(config.layers);
    for (std::size_t i = 0; i < config.layers; ++i) {
        blocks.push_back(nn::EncoderBlock::create(config.width, config.heads, rng));
    }
    return blocks;
}

Tensor run_blocks(const std::vector<nn::EncoderBlock>& blocks, Tensor x) {
    x = nn::add(x, nn::sinusoidal_positions(x.rows(), x.cols()));
    for (const auto& block : blocks) {
        x = block(x);
    }
    return x;
}

}  // namespace

StyleEncoder StyleEncoder::create(const StyleConfig& config, Rng& rng) {
    StyleEncoder enc;
    enc.config = config;
    enc.input = nn::Linear::create(config.n_expr, config.width, rng);
    enc.blocks = make_blocks(config, rng);
    enc.pool_proj = nn::Linear::create(2 * config.width, config.width, rng, false);
    return enc;
}

Tensor StyleEncoder::encode_frames(const Tensor& expressions) const {
    if (expressions.rank() != 2 || expressions.cols() != config.n_expr) {
        throw ShapeError("encode_frames: expected [T, " + std::to_string(config.n_expr) + "] input");
    }
    return run_blocks(blocks, input(expressions));
}

Tensor mean_std_stats(const Tensor& features) {
    if (features.rank() != 2 || features.rows() == 0) {
        throw ShapeError("pool_style: need at least one frame");
    }
    const Tensor mu = nn::mean_rows(features);
    const Tensor centered = nn::sub(features, nn::broadcast_rows(mu, features.rows()));
    const Tensor var = nn::mean_rows(nn::square(centered));
    const auto eps = static_cast<nn::Real>(kStyleStdEpsilon);
    const Tensor std = nn::add_scalar(nn::sqrt(nn::add_scalar(var, eps)), -static_cast<nn::Real>(std::sqrt(kStyleStdEpsilon)));
    return nn::concat({mu, std});
}

Tensor StyleEncoder::pool(const Tensor& features) const { return pool_proj.apply_vec(mean_std_stats(features)); }

std::vector<float> StyleEncoder::embed(const Matrix& expressions) const {
    nn::NoGradGuard guard;
    return embed(Tensor::from_matrix(expressions)).to_floats();
}

void StyleEncoder::collect(nn::ParamList& out, const std::string& prefix) const {
    input.collect(out, prefix + ".input");
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        blocks[i].collect(out, prefix + ".block" + std::to_string(i));
    }
    pool_proj.collect(out, prefix + ".pool");
}

StyleDecoder StyleDecoder::create(const StyleConfig& config, Rng& rng) {
    StyleDecoder dec;
    dec.config = config;
    dec.input = nn::Linear::create(2 * config.width, config.width, rng);
    dec.blocks = make_blocks(config, rng);
    dec.output = nn::Linear::create(config.width, config.n_expr, rng);
    return dec;
}

Tensor StyleDecoder::decode(const Tensor& features, const Tensor& style) const {
    if (features.rank() != 2 || features.cols() != config.width || style.numel() != config.width) {
        throw ShapeError("decode_sequence: feature or style width mismatch");
    }
    const Tensor joined = nn::concat_cols({features, nn::broadcast_rows(style, features.rows())});
    return output(run_blocks(blocks, input(joined)));
}

void StyleDecoder::collect(nn::ParamList& out, const std::string& prefix) const {
    input.collect(out, prefix + ".input");
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        blocks[i].collect(out, prefix + ".block" + std::to_string(i));
    }
    output.collect(out, prefix + ".output");
}

StyleAutoencoder StyleAutoencoder::create(const StyleConfig& config, std::uint64_t seed) {
    if (config.width == 0 || config.n_expr == 0 || config.heads == 0) {
        throw ShapeError("StyleConfig: sizes must be positive");
    }
    Rng rng(seed, 0x5717);
    StyleAutoencoder model;
    model.config = config;
    model.encoder = StyleEncoder::create(config, rng);
    model.decoder = StyleDecoder::create(config, rng);
    return model;
}

Tensor StyleAutoencoder::reconstruct(const Tensor& expressions) const {
    const Tensor f = encoder.encode_frames(expressions);
    return decoder.decode(f, encoder.pool(f));
}

nn::ParamList StyleAutoencoder::params() const {
    nn::ParamList out;
    encoder.collect(out, "encoder");
    decoder.collect(out, "decoder");
    return out;
}

StyleTrainResult train_style_autoencoder(StyleAutoencoder& model, const std::vector<Matrix>& sequences,
                                         const StyleTrainConfig& config,
                                         const std::function<void(std::size_t, double)>& on_step) {
    if (sequences.empty()) {
        throw DataError("train_style_autoencoder: empty dataset");
    }
    for (const auto& s : sequences) {
        if (s.rows == 0 || s.cols != model.config.n_expr) {
            throw ShapeError("train_style_autoencoder: sequence width does not match k");
        }
    }
    nn::Adam opt(nn::tensors_of(model.params()), {.learning_rate = config.learning_rate});
    StyleTrainResult result;
    const std::size_t batch = std::max<std::size_t>(1, config.batch);
    const std::size_t steps =
        config.steps > 0 ? config.steps : config.epochs * ((sequences.size() + batch - 1) / batch);
    result.losses.reserve(steps);
    const Rng base(config.seed, 0x57);
    for (std::size_t step = 0; step < steps; ++step) {
        Rng rng = base.fork(step);
        opt.zero_grad();
        double total = 0.0;
        for (std::size_t b = 0; b < batch; ++b) {
            const auto idx = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(sequences.size() - 1)));
            const Matrix& seq = sequences[idx];
            const std::size_t len = std::min(config.window, seq.rows);
            const auto begin = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(seq.rows - len)));
            const Tensor target = Tensor::from_matrix(seq.slice_rows(begin, begin + len));
            const Tensor loss = nn::scale(nn::mse(model.reconstruct(target), target), static_cast<nn::Real>(1.0 / batch));
            if (!std::isfinite(loss.item())) {
                throw NumericError("train_style_autoencoder: non-finite loss at step " + std::to_string(step));
            }
            loss.backward();
            total += loss.item();
        }
        opt.step();
        result.losses.push_back(total);
        if (on_step) {
            on_step(step, total);
        }
    }
    return result;
}

double style_reconstruction_mse(const StyleAutoencoder& model, const std::vector<Matrix>& sequences) {
    nn::NoGradGuard guard;
    double acc = 0.0;
    for (const auto& seq : sequences) {
        const Tensor x = Tensor::from_matrix(seq);
        acc += nn::mse(model.reconstruct(x), x).item();
    }
    return sequences.empty() ? 0.0 : acc / static_cast<double>(sequences.size());
}

}  // namespace polyglot
