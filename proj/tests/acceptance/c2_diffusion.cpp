// Noise schedule, forward process moments and guidance identities.
#include <cmath>

#include "acceptance.hpp"
#include "polyglot/diffusion.hpp"
#include "polyglot/trainer.hpp"
#include "test_support.hpp"

using namespace polyglot;

int main() {
    acceptance::Criterion crit("C2", "diffusion algebra");

    const DiffusionSchedule s = cosine_schedule(500);
    bool monotone = true;
    bool in_range = true;
    for (std::size_t n = 1; n <= 500; ++n) {
        monotone = monotone && s.alpha_bar[n] < s.alpha_bar[n - 1];
        in_range = in_range && s.alpha_bar[n] >= 0.0 && s.betas[n] > 0.0 && s.betas[n] <= kMaxBeta;
    }
    crit.check("N = 500 with 501 alpha_bar entries", s.steps == 500 && s.alpha_bar.size() == 501);
    crit.check("alpha_bar[0] == 1", s.alpha_bar[0] == 1.0);
    crit.check("alpha_bar strictly decreasing", monotone);
    crit.check("betas in (0, 0.999]", in_range, acceptance::fmt("alpha_bar[N] = %.3e", s.alpha_bar[500]));

    // q_sample moments per coordinate over 10k draws, 3 standard errors.
    const std::size_t draws = 10000;
    Rng rng(77);
    const Matrix x0 = test::random_matrix(1, 4, rng);
    for (std::size_t n : {1UL, 100UL, 250UL, 499UL}) {
        const double ab = s.alpha_bar[n];
        double worst_mean = 0.0;
        double worst_var = 0.0;
        for (std::size_t c = 0; c < x0.cols; ++c) {
            double sum = 0.0;
            double sq = 0.0;
            std::vector<double> xs(draws);
            for (std::size_t i = 0; i < draws; ++i) {
                const Matrix noise = standard_normal(1, x0.cols, rng);
                xs[i] = q_sample(s, x0, n, noise)(0, c);
                sum += xs[i];
            }
            const double mean = sum / draws;
            for (double x : xs) {
                sq += (x - mean) * (x - mean);
            }
            const double var = sq / (draws - 1);
            const double want_mean = std::sqrt(ab) * x0(0, c);
            const double want_var = 1.0 - ab;
            const double se_mean = std::sqrt(want_var / draws);
            const double se_var = want_var * std::sqrt(2.0 / (draws - 1));
            worst_mean = std::max(worst_mean, std::abs(mean - want_mean) / se_mean);
            worst_var = std::max(worst_var, std::abs(var - want_var) / se_var);
        }
        crit.check("q_sample moments at n = " + std::to_string(n), worst_mean < 3.0 && worst_var < 3.0,
                   acceptance::fmt("mean %.2f SE, variance %.2f SE", worst_mean, worst_var));
    }

    // Guidance on a real (untrained) conditional estimator.
    TrainConfig cfg = desk_train_config();
    cfg.width = 16;
    cfg.layers = 1;
    cfg.diffusion_steps = 20;
    cfg.window = 8;
    cfg.context = 2;
    ModelDims dims;
    dims.n_expr = 6;
    dims.n_shape = 4;
    dims.d_audio = 5;
    dims.d_text = 3;
    dims.d_style = 7;
    dims.languages = {"a"};
    const PolyglotModel model = PolyglotModel::create(cfg, dims);
    const SampleCondition cond{test::random_vector(4, rng), test::random_vector(3, rng), test::random_vector(7, rng),
                               "a"};
    std::size_t calls = 0;
    const Estimator base = model.estimator(cond);
    const Estimator counted = [&](const WindowInputs& in, std::size_t n, bool a, bool c) {
        ++calls;
        return base(in, n, a, c);
    };
    const WindowInputs in{test::random_matrix(2, 6, rng), test::random_matrix(8, 6, rng),
                          test::random_matrix(2, 5, rng), test::random_matrix(8, 5, rng)};
    const Matrix x_ac = base(in, 7, true, true);
    const Matrix x_a0 = base(in, 7, true, false);
    const Matrix x_00 = base(in, 7, false, false);
    crit.check("guidance branches differ", x_ac != x_a0 && x_a0 != x_00);

    calls = 0;
    const Matrix g11 = guided_estimate(counted, in, 7, {1.0, 1.0});
    crit.check("w = (1, 1) equals the conditional estimate bitwise", g11 == x_ac,
               "estimator calls: " + std::to_string(calls));
    crit.check("w = (1, 1) evaluates one branch", calls == 1);

    calls = 0;
    const Matrix g00 = guided_estimate(counted, in, 7, {0.0, 0.0});
    crit.check("w = (0, 0) equals the unconditional estimate bitwise", g00 == x_00);

    // Telescoping: with equal branches every weight pair returns the shared estimate.
    const Matrix shared = test::random_matrix(10, 6, rng);
    const Estimator flat = [&](const WindowInputs&, std::size_t, bool, bool) { return shared; };
    bool telescopes = true;
    for (const GuidanceConfig w : {GuidanceConfig{1.15, 1.15}, GuidanceConfig{0.0, 2.0}, GuidanceConfig{3.0, -1.0}}) {
        telescopes = telescopes && guided_estimate(flat, in, 7, w) == shared;
    }
    crit.check("equal branches telescope for any weights", telescopes);

    // Closed form for general weights, within float rounding.
    const Matrix g = guided_estimate(base, in, 7, {1.5, 2.0});
    double worst = 0.0;
    for (std::size_t i = 0; i < g.data.size(); ++i) {
        const double want = x_00.data[i] + 1.5 * (x_a0.data[i] - x_00.data[i]) + 2.0 * (x_ac.data[i] - x_a0.data[i]);
        worst = std::max(worst, std::abs(want - g.data[i]));
    }
    crit.check("x00 + wa (xa0 - x00) + wc (xac - xa0)", worst < 1e-5, acceptance::fmt("max abs diff %.2e", worst));

    // Whole-sequence sampler: unit weights reproduce the unguided sampler exactly.
    const Matrix audio = test::random_matrix(19, 5, rng);
    const Matrix seq11 = model.sample(audio, cond, {1.0, 1.0}, 5);
    const Matrix plain = model.sample_unguided(audio, cond, 5);
    crit.check("sequence sample at w = (1, 1) equals the unguided sampler bitwise", seq11 == plain);
    crit.check("sequence sample shape", seq11.rows == 19 && seq11.cols == 6);

    return crit.finish(120.0);
}
