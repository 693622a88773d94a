#include "polyglot/layers.hpp"

#include <algorithm>
#include <cmath>

#include "polyglot/numerics/ops.hpp"

namespace polyglot::nn {

std::vector<Tensor> tensors_of(const ParamList& params) {
    std::vector<Tensor> out;
    out.reserve(params.size());
    for (const auto& p : params) {
        out.push_back(p.tensor);
    }
    return out;
}

void set_requires_grad(const ParamList& params, bool on) {
    for (auto p : params) {
        p.tensor.set_requires_grad(on);
    }
}

void copy_values(const ParamList& from, const ParamList& to) {
    if (from.size() != to.size()) {
        throw ShapeError("copy_values: parameter lists differ in length");
    }
    for (std::size_t i = 0; i < from.size(); ++i) {
        if (from[i].name != to[i].name || from[i].tensor.shape() != to[i].tensor.shape()) {
            throw ShapeError("copy_values: mismatch at " + from[i].name);
        }
        auto dst = to[i].tensor;
        const auto src = from[i].tensor.values();
        std::copy(src.begin(), src.end(), dst.mutable_values().begin());
    }
}

Linear Linear::create(std::size_t in, std::size_t out, Rng& rng, bool with_bias) {
    // Xavier-uniform
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    std::vector<Real> w(in * out);
    for (auto& v : w) {
        v = static_cast<Real>((2.0 * rng.uniform() - 1.0) * limit);
    }
    Linear layer;
    layer.weight = Tensor::parameter({in, out}, std::move(w));
    if (with_bias) {
        layer.bias = Tensor::parameter({out}, std::vector<Real>(out, Real{0}));
    }
    return layer;
}

Tensor Linear::operator()(const Tensor& x) const {
    Tensor y = matmul(x, weight);
    return bias.defined() ? add_rowvec(y, bias) : y;
}

Tensor Linear::apply_vec(const Tensor& v) const {
    return reshape((*this)(reshape(v, {1, v.numel()})), {out_features()});
}

void Linear::collect(ParamList& out, const std::string& prefix) const {
    out.push_back({prefix + ".weight", weight});
    if (bias.defined()) {
        out.push_back({prefix + ".bias", bias});
    }
}

LayerNorm LayerNorm::create(std::size_t width) {
    return {Tensor::parameter({width}, std::vector<Real>(width, Real{1})),
            Tensor::parameter({width}, std::vector<Real>(width, Real{0}))};
}

Tensor LayerNorm::operator()(const Tensor& x) const {
    return add_rowvec(mul_rowvec(layer_norm_rows(x), gamma), beta);
}

void LayerNorm::collect(ParamList& out, const std::string& prefix) const {
    out.push_back({prefix + ".gamma", gamma});
    out.push_back({prefix + ".beta", beta});
}

MultiHeadAttention MultiHeadAttention::create(std::size_t width, std::size_t heads, Rng& rng) {
    if (heads == 0 || width % heads != 0) {
        throw ShapeError("MultiHeadAttention: width must be divisible by heads");
    }
    MultiHeadAttention mha;
    mha.query = Linear::create(width, width, rng);
    mha.key = Linear::create(width, width, rng);
    mha.value = Linear::create(width, width, rng);
    mha.output = Linear::create(width, width, rng);
    mha.heads = heads;
    return mha;
}

Tensor MultiHeadAttention::operator()(const Tensor& queries, const Tensor& memory,
                                      std::span<const std::uint8_t> mask) const {
    const std::size_t width = query.out_features();
    const std::size_t head_dim = width / heads;
    const Tensor q = query(queries);
    const Tensor k = key(memory);
    const Tensor v = value(memory);
    const auto inv_sqrt = static_cast<Real>(1.0 / std::sqrt(static_cast<double>(head_dim)));
    std::vector<Tensor> per_head;
    per_head.reserve(heads);
    for (std::size_t h = 0; h < heads; ++h) {
        const std::size_t lo = h * head_dim;
        const std::size_t hi = lo + head_dim;
        const Tensor scores = scale(matmul_nt(slice_cols(q, lo, hi), slice_cols(k, lo, hi)), inv_sqrt);
        const Tensor weights = softmax_rows(scores, mask);
        per_head.push_back(matmul(weights, slice_cols(v, lo, hi)));
    }
    return output(heads == 1 ? per_head.front() : concat_cols(per_head));
}

void MultiHeadAttention::collect(ParamList& out, const std::string& prefix) const {
    query.collect(out, prefix + ".query");
    key.collect(out, prefix + ".key");
    value.collect(out, prefix + ".value");
    output.collect(out, prefix + ".output");
}

FeedForward FeedForward::create(std::size_t width, std::size_t hidden, Rng& rng) {
    return {Linear::create(width, hidden, rng), Linear::create(hidden, width, rng)};
}

Tensor FeedForward::operator()(const Tensor& x) const { return down(gelu(up(x))); }

void FeedForward::collect(ParamList& out, const std::string& prefix) const {
    up.collect(out, prefix + ".up");
    down.collect(out, prefix + ".down");
}

EncoderBlock EncoderBlock::create(std::size_t width, std::size_t heads, Rng& rng) {
    EncoderBlock b;
    b.norm_attn = LayerNorm::create(width);
    b.attn = MultiHeadAttention::create(width, heads, rng);
    b.norm_ff = LayerNorm::create(width);
    b.ff = FeedForward::create(width, 4 * width, rng);
    return b;
}

Tensor EncoderBlock::operator()(const Tensor& x) const {
    const Tensor normed = norm_attn(x);
    const Tensor h = add(x, attn(normed, normed));
    return add(h, ff(norm_ff(h)));
}

void EncoderBlock::collect(ParamList& out, const std::string& prefix) const {
    norm_attn.collect(out, prefix + ".norm_attn");
    attn.collect(out, prefix + ".attn");
    norm_ff.collect(out, prefix + ".norm_ff");
    ff.collect(out, prefix + ".ff");
}

DecoderBlock DecoderBlock::create(std::size_t width, std::size_t heads, Rng& rng) {
    DecoderBlock b;
    b.norm_self = LayerNorm::create(width);
    b.self_attn = MultiHeadAttention::create(width, heads, rng);
    b.norm_cross = LayerNorm::create(width);
    b.cross_attn = MultiHeadAttention::create(width, heads, rng);
    b.norm_ff = LayerNorm::create(width);
    b.ff = FeedForward::create(width, 4 * width, rng);
    return b;
}

Tensor DecoderBlock::operator()(const Tensor& x, const Tensor& memory,
                                std::span<const std::uint8_t> cross_mask) const {
    const Tensor normed = norm_self(x);
    Tensor h = add(x, self_attn(normed, normed));
    h = add(h, cross_attn(norm_cross(h), memory, cross_mask));
    return add(h, ff(norm_ff(h)));
}

void DecoderBlock::collect(ParamList& out, const std::string& prefix) const {
    norm_self.collect(out, prefix + ".norm_self");
    self_attn.collect(out, prefix + ".self_attn");
    norm_cross.collect(out, prefix + ".norm_cross");
    cross_attn.collect(out, prefix + ".cross_attn");
    norm_ff.collect(out, prefix + ".norm_ff");
    ff.collect(out, prefix + ".ff");
}

Tensor sinusoidal_positions(std::size_t length, std::size_t width) {
    std::vector<Real> pe(length * width);
    for (std::size_t t = 0; t < length; ++t) {
        for (std::size_t i = 0; i < width; ++i) {
            const double freq = std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / static_cast<double>(width));
            const double angle = static_cast<double>(t) * freq;
            pe[t * width + i] = static_cast<Real>(i % 2 == 0 ? std::sin(angle) : std::cos(angle));
        }
    }
    return Tensor({length, width}, std::move(pe));
}

Tensor sinusoidal_embedding(double position, std::size_t width) {
    std::vector<Real> e(width);
    for (std::size_t i = 0; i < width; ++i) {
        const double freq = std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / static_cast<double>(width));
        e[i] = static_cast<Real>(i % 2 == 0 ? std::sin(position * freq) : std::cos(position * freq));
    }
    return Tensor({width}, std::move(e));
}

}  // namespace polyglot::nn
