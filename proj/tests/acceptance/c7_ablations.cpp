// Ablation direction on the toy run: the full model is not worse on LVE.
#include "acceptance.hpp"
#include "toy_run.hpp"

using namespace polyglot;

namespace {

double toy_lve(const acceptance::ToyCorpus& corpus, const Ablations& ablations, double& final_loss) {
    TrainConfig cfg = acceptance::toy_config();
    cfg.ablations = ablations;
    Trainer trainer(cfg, corpus.face, corpus.style, corpus.train);
    trainer.run(cfg.steps);
    final_loss = acceptance::window_mean(trainer.loss_log(), cfg.steps - 50, 50);
    return acceptance::evaluate_toy(trainer.model(), corpus, 99).metrics.lve;
}

}  // namespace

int main() {
    acceptance::Criterion crit("C7", "ablation direction");
    const acceptance::ToyCorpus corpus = acceptance::make_toy_corpus();
    constexpr double kTies = 1.05;

    double loss_full = 0.0;
    double loss_s = 0.0;
    double loss_t = 0.0;
    Ablations no_s;
    no_s.no_style_S = true;
    Ablations no_t;
    no_t.no_text_t = true;
    const double full = toy_lve(corpus, Ablations{}, loss_full);
    const double without_s = toy_lve(corpus, no_s, loss_s);
    const double without_t = toy_lve(corpus, no_t, loss_t);
    crit.check("three runs complete with finite LVE",
               std::isfinite(full) && std::isfinite(without_s) && std::isfinite(without_t),
               acceptance::fmt("final loss %.3f / %.3f / %.3f", loss_full, loss_s, loss_t));
    crit.check("full <= 1.05 x no_style_S", full <= kTies * without_s,
               acceptance::fmt("%.3f mm vs %.3f mm (ratio %.3f)", full, without_s, full / without_s));
    crit.check("full <= 1.05 x no_text_t", full <= kTies * without_t,
               acceptance::fmt("%.3f mm vs %.3f mm (ratio %.3f)", full, without_t, full / without_t));

    return crit.finish(1800.0);
}
