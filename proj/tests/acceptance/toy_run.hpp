// Shared desk-scale toy setup for the training criteria.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "polyglot/metrics.hpp"
#include "polyglot/morphable.hpp"
#include "polyglot/numerics/rng.hpp"
#include "polyglot/style.hpp"
#include "polyglot/synthetic.hpp"
#include "polyglot/trainer.hpp"

namespace polyglot::acceptance {

inline constexpr std::size_t kToySteps = 2000;
inline constexpr std::size_t kHeldOut = 10;

struct ToyCorpus {
    MorphableModel face;
    std::vector<SampleData> train;
    std::vector<SampleData> held_out;
    std::vector<const SampleData*> refs;  // a training sequence of the same speaker, per held-out sample
    StyleEncoder style;
};

inline ToyCorpus make_toy_corpus() {
    ToyCorpus c;
    c.face = make_synthetic_model();
    SyntheticSetSpec spec;
    spec.languages = 3;
    spec.speakers = 3;
    spec.sentences = 6;
    spec.seed = 21;
    std::vector<SyntheticSample> all = generate_polyset(spec, c.face);
    std::vector<std::size_t> order(all.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(3);
    rng.shuffle(order);
    for (std::size_t i = 0; i < order.size(); ++i) {
        (i < kHeldOut ? c.held_out : c.train).push_back(all[order[i]].data);
    }
    for (const auto& target : c.held_out) {
        const auto same = [&](bool language) {
            return std::find_if(c.train.begin(), c.train.end(), [&](const SampleData& s) {
                return s.record.speaker == target.record.speaker &&
                       (!language || s.record.language == target.record.language);
            });
        };
        auto it = same(true);
        c.refs.push_back(&*(it != c.train.end() ? it : same(false)));
    }

    StyleConfig sc;
    sc.n_expr = c.face.n_expr;
    sc.width = 32;
    sc.layers = 2;
    sc.heads = 4;
    StyleAutoencoder ae = StyleAutoencoder::create(sc, 5);
    std::vector<Matrix> seqs;
    for (const auto& s : c.train) {
        seqs.push_back(s.expressions);
    }
    StyleTrainConfig st;
    st.steps = 300;
    st.batch = 8;
    st.window = 32;
    st.learning_rate = 2e-3;
    st.seed = 5;
    train_style_autoencoder(ae, seqs, st);
    c.style = ae.encoder;
    return c;
}

inline TrainConfig toy_config() {
    TrainConfig cfg = desk_train_config();
    cfg.steps = kToySteps;
    cfg.seed = 17;
    return cfg;
}

struct ToyEval {
    MetricValues metrics;
    double seam_jump = 0.0;
    double interior_jump = 0.0;
};

/// Mean vertex displacement between consecutive frames, split at window seams.
inline void add_jumps(const MeshSeq& m, std::size_t window, double& seam, std::size_t& n_seam, double& interior,
                      std::size_t& n_interior) {
    const std::size_t V = m.n_vertices;
    for (std::size_t t = 1; t < m.positions.rows; ++t) {
        double acc = 0.0;
        for (std::size_t v = 0; v < V; ++v) {
            double d2 = 0.0;
            for (std::size_t c = 0; c < 3; ++c) {
                const double d = static_cast<double>(m.positions(t, 3 * v + c)) - m.positions(t - 1, 3 * v + c);
                d2 += d * d;
            }
            acc += std::sqrt(d2);
        }
        acc /= static_cast<double>(V);
        if (t % window == 0) {
            seam += acc;
            ++n_seam;
        } else {
            interior += acc;
            ++n_interior;
        }
    }
}

inline ToyEval evaluate_toy(const PolyglotModel& model, const ToyCorpus& c, std::uint64_t seed) {
    ToyEval out;
    MetricReport report;
    double seam = 0.0;
    double interior = 0.0;
    std::size_t n_seam = 0;
    std::size_t n_interior = 0;
    for (std::size_t i = 0; i < c.held_out.size(); ++i) {
        const SampleData& target = c.held_out[i];
        const SampleCondition cond = make_condition(target, c.style.embed(c.refs[i]->expressions));
        const Matrix pred = model.sample(target.audio, cond, GuidanceConfig{}, Rng(seed).fork(i).next_u64());
        const MeshSeq pm = expressions_to_meshes(c.face, target.beta, ExpressionSeq{pred, kMotionFps});
        const MeshSeq gm = expressions_to_meshes(c.face, target.beta, ExpressionSeq{target.expressions, kMotionFps});
        report.add(target.record.language, evaluate_pair(pm, gm, c.face));
        add_jumps(pm, model.config.window, seam, n_seam, interior, n_interior);
    }
    out.metrics = report.overall;
    out.seam_jump = seam / static_cast<double>(std::max<std::size_t>(1, n_seam));
    out.interior_jump = interior / static_cast<double>(std::max<std::size_t>(1, n_interior));
    return out;
}

inline double window_mean(const std::vector<double>& xs, std::size_t begin, std::size_t count) {
    const std::size_t end = std::min(xs.size(), begin + count);
    if (begin >= end) {
        return NAN;
    }
    return std::accumulate(xs.begin() + static_cast<std::ptrdiff_t>(begin), xs.begin() + static_cast<std::ptrdiff_t>(end),
                           0.0) /
           static_cast<double>(end - begin);
}

}  // namespace polyglot::acceptance
