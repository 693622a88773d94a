// DTW, mesh synthesis and loss values against independent reference code.
#include <cmath>
#include <functional>
#include <numeric>

#include "acceptance.hpp"
#include "polyglot/losses.hpp"
#include "polyglot/metrics.hpp"
#include "polyglot/morphable.hpp"
#include "polyglot/style.hpp"
#include "test_support.hpp"

using namespace polyglot;
using nn::Tensor;

namespace {

struct Best {
    double total = INFINITY;
    std::size_t length = 0;
};

// Enumerates every monotone path; ties go to the shorter one.
Best enumerate_paths(const std::vector<double>& cost, std::size_t R, std::size_t C) {
    Best best;
    std::vector<std::pair<std::size_t, std::size_t>> path;
    std::function<void(std::size_t, std::size_t)> walk = [&](std::size_t i, std::size_t j) {
        path.emplace_back(i, j);
        if (i == R - 1 && j == C - 1) {
            double total = 0.0;
            for (const auto& [a, b] : path) {
                total += cost[a * C + b];
            }
            if (total < best.total || (total == best.total && path.size() < best.length)) {
                best = {total, path.size()};
            }
        } else {
            if (i + 1 < R && j + 1 < C) {
                walk(i + 1, j + 1);
            }
            if (i + 1 < R) {
                walk(i + 1, j);
            }
            if (j + 1 < C) {
                walk(i, j + 1);
            }
        }
        path.pop_back();
    };
    walk(0, 0);
    return best;
}

double lip_cost(const MeshSeq& a, std::size_t i, const MeshSeq& b, std::size_t j, const std::vector<std::size_t>& lips) {
    double acc = 0.0;
    for (auto v : lips) {
        double d2 = 0.0;
        for (std::size_t c = 0; c < 3; ++c) {
            const double d = static_cast<double>(a.positions(i, 3 * v + c)) - b.positions(j, 3 * v + c);
            d2 += d * d;
        }
        acc += std::sqrt(d2);
    }
    return acc / static_cast<double>(lips.size());
}

double rel_diff(double got, double want) { return std::abs(got - want) / std::max(1.0, std::abs(want)); }

}  // namespace

int main() {
    acceptance::Criterion crit("C3", "oracle equivalence");
    Rng rng(31);

    // DTW
    std::size_t exact = 0;
    std::size_t mesh_level = 0;
    const std::vector<std::size_t> lips{0, 2, 3};
    for (int trial = 0; trial < 100; ++trial) {
        const auto R = static_cast<std::size_t>(rng.uniform_int(1, 6));
        const auto C = static_cast<std::size_t>(rng.uniform_int(1, 6));
        std::vector<double> cost(R * C);
        for (auto& c : cost) {
            // coarse values force ties
            c = trial % 2 == 0 ? rng.uniform() : static_cast<double>(rng.uniform_int(0, 3));
        }
        const DtwResult dp = dtw(cost, R, C);
        const Best bf = enumerate_paths(cost, R, C);
        exact += dp.total == bf.total && dp.length == bf.length ? 1 : 0;

        MeshSeq a;
        MeshSeq b;
        a.n_vertices = b.n_vertices = 4;
        a.positions = test::random_matrix(R, 12, rng, 0.01);
        b.positions = test::random_matrix(C, 12, rng, 0.01);
        std::vector<double> lc(R * C);
        for (std::size_t i = 0; i < R; ++i) {
            for (std::size_t j = 0; j < C; ++j) {
                lc[i * C + j] = lip_cost(a, i, b, j, lips);
            }
        }
        const Best mb = enumerate_paths(lc, R, C);
        mesh_level += std::abs(dtw_lip(a, b, lips) - mb.total / static_cast<double>(mb.length)) < 1e-12 ? 1 : 0;
    }
    crit.check("DTW DP equals path enumeration (100 cases, T <= 6, exact)", exact == 100,
               std::to_string(exact) + "/100");
    crit.check("lip DTW equals enumeration over lip distances", mesh_level == 100,
               std::to_string(mesh_level) + "/100");

    // Mesh synthesis against a dense double-precision product.
    const MorphableModel face = make_synthetic_model();
    const std::vector<float> beta = test::random_vector(face.n_shape, rng, 1.0);
    const Matrix expr = test::random_matrix(5, face.n_expr, rng, 0.5);
    Matrix oracle(5, 3 * face.n_vertices);
    for (std::size_t t = 0; t < 5; ++t) {
        for (std::size_t r = 0; r < 3 * face.n_vertices; ++r) {
            double acc = face.template_vertices[r];
            for (std::size_t j = 0; j < face.n_shape; ++j) {
                acc += static_cast<double>(face.shape_basis(r, j)) * beta[j];
            }
            for (std::size_t j = 0; j < face.n_expr; ++j) {
                acc += static_cast<double>(face.expr_basis(r, j)) * expr(t, j);
            }
            oracle(t, r) = static_cast<float>(acc);
        }
    }
    const MeshSeq meshes = expressions_to_meshes(face, beta, ExpressionSeq{expr, kMotionFps});
    const MeshSynthesizer synth(face);
    const Tensor offset = synth.identity_offset(beta);
    const Matrix diff_meshes = synth.meshes(Tensor::from_matrix(expr), offset).to_matrix();
    const double e1 = test::max_abs_diff(meshes.positions.data, oracle.data);
    const double e2 = test::max_abs_diff(diff_meshes.data, oracle.data);
    crit.check("expressions_to_meshes vs dense oracle < 1e-6", e1 < 1e-6, acceptance::fmt("max abs diff %.2e", e1));
    crit.check("MeshSynthesizer vs dense oracle < 1e-6", e2 < 1e-6, acceptance::fmt("max abs diff %.2e", e2));

    // Losses against loops.
    const std::size_t T = 6;
    const std::size_t k = face.n_expr;
    const Matrix pred = test::random_matrix(T, k, rng, 0.3);
    const Matrix gt = test::random_matrix(T, k, rng, 0.3);
    const double lambda = 10.0;
    double plain = 0.0;
    double mouth = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t j = 0; j < k; ++j) {
            const double d = static_cast<double>(pred(t, j)) - gt(t, j);
            plain += d * d;
        }
        for (auto j : face.mouth_param_ids) {
            const double d = static_cast<double>(pred(t, j)) - gt(t, j);
            mouth += d * d;
        }
    }
    const double want_simple =
        plain / static_cast<double>(T * k) + lambda * mouth / static_cast<double>(T * face.mouth_param_ids.size());
    const double got_simple =
        loss_simple(Tensor::from_matrix(pred), Tensor::from_matrix(gt), face.mouth_param_ids, lambda).item();
    crit.check("L_simple vs loop < 1e-5", rel_diff(got_simple, want_simple) < 1e-5,
               acceptance::fmt("%.8f vs %.8f", got_simple, want_simple));

    const Matrix pm = synth.meshes(Tensor::from_matrix(pred), offset).to_matrix();
    const Matrix gm = synth.meshes(Tensor::from_matrix(gt), offset).to_matrix();
    const std::size_t D = pm.cols;
    double vert = 0.0;
    double vel = 0.0;
    double acc = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t j = 0; j < D; ++j) {
            const double d = static_cast<double>(pm(t, j)) - gm(t, j);
            vert += d * d;
            if (t + 1 < T) {
                const double dv = (static_cast<double>(pm(t + 1, j)) - pm(t, j)) - (static_cast<double>(gm(t + 1, j)) - gm(t, j));
                vel += dv * dv;
            }
            if (t + 2 < T) {
                const double a2 = static_cast<double>(pm(t + 2, j)) - 2.0 * pm(t + 1, j) + pm(t, j);
                acc += a2 * a2;
            }
        }
    }
    vert /= static_cast<double>(T * D);
    vel /= static_cast<double>((T - 1) * D);
    acc /= static_cast<double>((T - 2) * D);
    const auto geo = loss_geometric(Tensor::from_matrix(pm), Tensor::from_matrix(gm));
    // Mesh values are O(0.1 m) while the differences are O(1e-3): compare on the loss scale.
    crit.check("L_v vs loop < 1e-5", rel_diff(geo.vertex.item() / vert, 1.0) < 1e-5,
               acceptance::fmt("%.6e vs %.6e", geo.vertex.item(), vert));
    crit.check("L_vel vs loop < 1e-5", rel_diff(geo.velocity.item() / vel, 1.0) < 1e-5,
               acceptance::fmt("%.6e vs %.6e", geo.velocity.item(), vel));
    crit.check("L_smooth vs loop < 1e-5", rel_diff(geo.smooth.item() / acc, 1.0) < 1e-5,
               acceptance::fmt("%.6e vs %.6e", geo.smooth.item(), acc));

    StyleConfig sc;
    sc.n_expr = k;
    sc.width = 16;
    sc.layers = 1;
    sc.heads = 2;
    const StyleAutoencoder ae = StyleAutoencoder::create(sc, 3);
    const std::vector<float> ref = ae.encoder.embed(gt);
    const std::vector<float> emb = ae.encoder.embed(pred);
    double style = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) {
        style += (static_cast<double>(emb[i]) - ref[i]) * (static_cast<double>(emb[i]) - ref[i]);
    }
    style /= static_cast<double>(ref.size());
    const double got_style = loss_style(ae.encoder, Tensor::from_matrix(pred), Tensor::from_vector(ref)).item();
    crit.check("L_style vs embedding loop < 1e-5", rel_diff(got_style, style) < 1e-5,
               acceptance::fmt("%.8f vs %.8f", got_style, style));

    LossParts parts{Tensor::scalar(static_cast<nn::Real>(got_simple)), Tensor::scalar(static_cast<nn::Real>(got_style)),
                    geo.vertex, geo.velocity, geo.smooth};
    const LossWeights w;
    const double want_total = w.simple * got_simple + w.style * got_style + w.vertex * geo.vertex.item() +
                              w.velocity * geo.velocity.item() + w.smooth * geo.smooth.item();
    const double got_total = total_loss(parts, w).item();
    crit.check("total loss vs weighted sum < 1e-5", rel_diff(got_total, want_total) < 1e-5,
               acceptance::fmt("%.8f vs %.8f", got_total, want_total));

    return crit.finish(120.0);
}
