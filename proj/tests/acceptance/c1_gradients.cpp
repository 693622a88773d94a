// Central-difference checks of every differentiable op and the composed
// losses, in double precision on tiny shapes.
#include <memory>
#include <numeric>

#include "acceptance.hpp"
#include "polyglot/conditioning.hpp"
#include "polyglot/denoiser.hpp"
#include "polyglot/losses.hpp"
#include "polyglot/morphable.hpp"
#include "polyglot/numerics/gradcheck.hpp"
#include "polyglot/numerics/ops.hpp"
#include "polyglot/style.hpp"
#include "test_support.hpp"

using namespace polyglot;
using nn::Tensor;

namespace {

constexpr double kTolerance = 1e-4;
constexpr double kStep = 1e-3;

// sum(y * R) with a fixed random R, so no output coordinate is structurally flat.
std::function<Tensor()> weighted(std::function<Tensor()> g, std::uint64_t seed) {
    auto w = std::make_shared<Tensor>();
    return [g = std::move(g), w, seed] {
        const Tensor y = g();
        if (!w->defined()) {
            Rng r(seed);
            *w = test::random_tensor(y.shape(), r);
        }
        return nn::sum(nn::mul(y, *w));
    };
}

std::vector<Tensor> leaves(const nn::ParamList& params) { return nn::tensors_of(params); }

}  // namespace

int main() {
    static_assert(sizeof(nn::Real) == 8, "gradient checks run in double precision");
    acceptance::Criterion crit("C1", "gradient integrity (finite differences, rel. err < 1e-4)");
    Rng rng(2024);
    std::uint64_t probe = 100;

    const auto run = [&](const std::string& name, const std::function<Tensor()>& f, const std::vector<Tensor>& params,
                         bool raw = false) {
        const auto r = nn::finite_difference_check(raw ? f : weighted(f, ++probe), params, kStep);
        crit.check(name, r.passed(kTolerance),
                   acceptance::fmt("max rel err %.2e", r.max_rel_error) + (r.passed(kTolerance) ? "" : " at " + r.worst));
    };

    // elementwise and scalar ops
    Tensor a = test::random_param({3, 4}, rng);
    Tensor b = test::random_param({3, 4}, rng);
    run("add", [&] { return nn::add(a, b); }, {a, b});
    run("sub", [&] { return nn::sub(a, b); }, {a, b});
    run("mul", [&] { return nn::mul(a, b); }, {a, b});
    run("scale", [&] { return nn::scale(a, -1.7); }, {a});
    run("add_scalar", [&] { return nn::add_scalar(a, 0.3); }, {a});
    run("square", [&] { return nn::square(a); }, {a});
    run("sqrt", [&] { return nn::sqrt(nn::add_scalar(nn::square(a), 0.5)); }, {a});
    run("gelu", [&] { return nn::gelu(a); }, {a});
    run("tanh", [&] { return nn::tanh(a); }, {a});
    run("map_unary", [&] {
        return nn::map_unary(a, [](nn::Real x) { return std::sin(x); }, [](nn::Real x) { return std::cos(x); });
    }, {a});

    // products and layout
    Tensor m = test::random_param({4, 5}, rng);
    Tensor n = test::random_param({6, 4}, rng);
    run("matmul", [&] { return nn::matmul(a, m); }, {a, m});
    run("matmul_nt", [&] { return nn::matmul_nt(n, a); }, {n, a});
    run("transpose", [&] { return nn::transpose(a); }, {a});
    Tensor v = test::random_param({4}, rng);
    run("add_rowvec", [&] { return nn::add_rowvec(a, v); }, {a, v});
    run("mul_rowvec", [&] { return nn::mul_rowvec(a, v); }, {a, v});
    run("broadcast_rows", [&] { return nn::broadcast_rows(v, 3); }, {v});

    // normalizations
    run("softmax_rows", [&] { return nn::softmax_rows(a); }, {a});
    const std::vector<std::uint8_t> mask{1, 0, 1, 1, 0, 1, 0, 0, 1, 1, 1, 0};
    run("softmax_rows masked", [&] { return nn::softmax_rows(a, mask); }, {a});
    run("layer_norm_rows", [&] { return nn::layer_norm_rows(a); }, {a});

    // joins, slices, gathers
    Tensor c = test::random_param({2, 4}, rng);
    Tensor d = test::random_param({3, 2}, rng);
    Tensor u = test::random_param({3}, rng);
    run("concat_rows", [&] { return nn::concat_rows({a, c}); }, {a, c});
    run("concat_cols", [&] { return nn::concat_cols({a, d}); }, {a, d});
    run("concat", [&] { return nn::concat({v, u}); }, {v, u});
    run("slice_rows", [&] { return nn::slice_rows(a, 1, 3); }, {a});
    run("slice_cols", [&] { return nn::slice_cols(a, 1, 4); }, {a});
    const std::vector<std::size_t> cols{3, 0, 3};
    run("gather_cols", [&] { return nn::gather_cols(a, cols); }, {a});
    const std::vector<std::size_t> rows{2, 2, 0};
    run("gather_rows", [&] { return nn::gather_rows(a, rows); }, {a});
    run("reshape", [&] { return nn::reshape(a, {2, 6}); }, {a});

    // reductions
    run("sum", [&] { return nn::sum(nn::square(a)); }, {a}, true);
    run("mean", [&] { return nn::mean(nn::square(a)); }, {a}, true);
    run("mean_rows", [&] { return nn::mean_rows(a); }, {a});
    run("mse", [&] { return nn::mse(a, b); }, {a, b}, true);

    // layers
    const std::size_t h = 8;
    const Tensor x = test::random_param({5, h}, rng);
    const Tensor mem = test::random_param({6, h}, rng);
    {
        const nn::Linear lin = nn::Linear::create(h, 3, rng);
        nn::ParamList p;
        lin.collect(p, "lin");
        auto ps = leaves(p);
        ps.push_back(x);
        run("Linear", [&] { return lin(x); }, ps);
    }
    {
        nn::LayerNorm ln = nn::LayerNorm::create(h);
        for (auto& g : ln.gamma.mutable_values()) {
            g = static_cast<nn::Real>(1.0 + 0.3 * rng.normal());
        }
        nn::ParamList p;
        ln.collect(p, "ln");
        auto ps = leaves(p);
        ps.push_back(x);
        run("LayerNorm", [&] { return ln(x); }, ps);
    }
    {
        const nn::MultiHeadAttention mha = nn::MultiHeadAttention::create(h, 2, rng);
        nn::ParamList p;
        mha.collect(p, "mha");
        auto ps = leaves(p);
        ps.push_back(x);
        ps.push_back(mem);
        std::vector<std::uint8_t> band(5 * 6, 0);
        for (std::size_t i = 0; i < 5; ++i) {
            for (std::size_t j = 0; j < 6; ++j) {
                band[i * 6 + j] = (i > j ? i - j : j - i) <= 1 ? 1 : 0;
            }
        }
        run("MultiHeadAttention", [&] { return mha(x, mem, band); }, ps);
    }
    {
        const nn::FeedForward ff = nn::FeedForward::create(h, 2 * h, rng);
        nn::ParamList p;
        ff.collect(p, "ff");
        auto ps = leaves(p);
        ps.push_back(x);
        run("FeedForward", [&] { return ff(x); }, ps);
    }
    {
        const nn::EncoderBlock blk = nn::EncoderBlock::create(h, 2, rng);
        nn::ParamList p;
        blk.collect(p, "enc");
        auto ps = leaves(p);
        ps.push_back(x);
        run("EncoderBlock", [&] { return blk(x); }, ps);
    }
    {
        const nn::DecoderBlock blk = nn::DecoderBlock::create(h, 2, rng);
        nn::ParamList p;
        blk.collect(p, "dec");
        auto ps = leaves(p);
        ps.push_back(x);
        ps.push_back(mem);
        const std::vector<std::uint8_t> everything(5 * 6, 1);
        run("DecoderBlock", [&] { return blk(x, mem, everything); }, ps);
    }

    // style autoencoder pieces
    StyleConfig sc;
    sc.n_expr = 5;
    sc.width = h;
    sc.layers = 1;
    sc.heads = 2;
    const Tensor expr = test::random_param({6, 5}, rng);
    {
        const StyleAutoencoder ae = StyleAutoencoder::create(sc, 9);
        nn::ParamList ep;
        ae.encoder.collect(ep, "e");
        auto ps = leaves(ep);
        ps.push_back(expr);
        run("style encode_frames", [&] { return ae.encoder.encode_frames(expr); }, ps);
        run("style pool", [&] { return ae.encoder.embed(expr); }, ps);
        const Tensor feats = test::random_param({6, h}, rng);
        const Tensor style = test::random_param({h}, rng);
        nn::ParamList dp;
        ae.decoder.collect(dp, "d");
        auto qs = leaves(dp);
        qs.push_back(feats);
        qs.push_back(style);
        run("style decode (broadcast S)", [&] { return ae.decoder.decode(feats, style); }, qs);
        auto all = leaves(ae.params());
        all.push_back(expr);
        const Tensor target = test::random_tensor({6, 5}, rng);
        run("style reconstruction mse", [&] { return nn::mse(ae.reconstruct(expr), target); }, all, true);
    }

    // condition fusion and the denoiser
    ConditionConfig cc;
    cc.d_text = 3;
    cc.n_shape = 4;
    cc.d_style = 5;
    cc.d_audio = 3;
    cc.width = h;
    cc.n_steps = 10;
    const ConditionFuser fuser = ConditionFuser::create(cc, rng);
    const Tensor t_hat = test::random_param({3}, rng);
    const Tensor beta = test::random_param({4}, rng);
    const Tensor s = test::random_param({5}, rng);
    {
        nn::ParamList p;
        fuser.collect(p, "cond");
        auto ps = leaves(p);
        ps.insert(ps.end(), {t_hat, beta, s});
        run("condition fuse", [&] { return fuser.fuse(t_hat, beta, s, 7); }, ps);
        ConditionBundle dropped{beta, t_hat, s, true, true};
        run("condition fuse (null embeddings)", [&] { return fuser.fuse(dropped, 7); }, ps);
    }
    {
        DenoiserConfig dc;
        dc.n_expr = 4;
        dc.d_audio = 3;
        dc.width = h;
        dc.layers = 1;
        dc.heads = 2;
        dc.window = 4;
        dc.context = 2;
        dc.radius = 1;
        const Denoiser den = Denoiser::create(dc, rng);
        nn::ParamList p;
        den.collect(p, "den");
        auto ps = leaves(p);
        const Tensor prev = test::random_param({2, 4}, rng);
        const Tensor noisy = test::random_param({4, 4}, rng);
        const Tensor prev_a = test::random_param({2, 3}, rng);
        const Tensor cur_a = test::random_param({4, 3}, rng);
        const Tensor cond = test::random_param({h}, rng);
        ps.insert(ps.end(), {prev, noisy, prev_a, cur_a, cond});
        run("denoiser forward (h=8, T_w=4, T_p=2, 1 layer)",
            [&] { return den.forward(prev, noisy, prev_a, cur_a, cond); }, ps);
    }

    // composed losses
    const MorphableModel face = test::small_model(6, 3, 16, 5);
    const MeshSynthesizer synth(face);
    const std::vector<float> beta_face = test::random_vector(3, rng, 0.5);
    const Tensor offset = synth.identity_offset(beta_face);
    Tensor pred = test::random_param({5, 16}, rng, 0.5);
    const Tensor gt = test::random_tensor({5, 16}, rng, 0.5);
    run("mesh synthesis", [&] { return synth.meshes(pred, offset); }, {pred});
    run("loss_simple", [&] { return loss_simple(pred, gt, face.mouth_param_ids, 10.0); }, {pred}, true);
    const Tensor gt_mesh = synth.meshes(gt, offset);
    run("loss_vertex", [&] { return loss_geometric(synth.meshes(pred, offset), gt_mesh).vertex; }, {pred}, true);
    run("loss_velocity", [&] { return loss_geometric(synth.meshes(pred, offset), gt_mesh).velocity; }, {pred}, true);
    run("loss_smooth", [&] { return loss_geometric(synth.meshes(pred, offset), gt_mesh).smooth; }, {pred}, true);
    StyleConfig fc = sc;
    fc.n_expr = 16;
    const StyleAutoencoder frozen = StyleAutoencoder::create(fc, 4);
    nn::ParamList fp;
    frozen.encoder.collect(fp, "e");
    nn::set_requires_grad(fp, false);
    const Tensor ref = test::random_tensor({h}, rng);
    run("loss_style", [&] { return loss_style(frozen.encoder, pred, ref); }, {pred}, true);
    const LossWeights w{1.0, 10.0, 1.0, 200.0, 50.0, 5.0};
    run("total loss", [&] {
        LossParts parts;
        parts.simple = loss_simple(pred, gt, face.mouth_param_ids, w.mouth);
        parts.style = loss_style(frozen.encoder, pred, ref);
        const auto geo = loss_geometric(synth.meshes(pred, offset), gt_mesh);
        parts.vertex = geo.vertex;
        parts.velocity = geo.velocity;
        parts.smooth = geo.smooth;
        return total_loss(parts, w);
    }, {pred}, true);

    return crit.finish(120.0);
}
