#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "polyglot/conditioning.hpp"
#include "polyglot/dataset.hpp"
#include "polyglot/denoiser.hpp"
#include "polyglot/diffusion.hpp"
#include "polyglot/losses.hpp"
#include "polyglot/metrics.hpp"
#include "polyglot/morphable.hpp"
#include "polyglot/numerics/adam.hpp"
#include "polyglot/style.hpp"

namespace polyglot {

struct Ablations {
    bool no_style_S = false;
    bool no_text_t = false;
    bool no_style_loss = false;
    bool lookup_table_language = false;

    /// Rejects combinations that contradict each other.
    void validate() const;
};

struct TrainConfig {
    std::size_t epochs = 1000;
    std::size_t steps = 0;  // overrides epochs when nonzero
    std::size_t batch = 128;
    double learning_rate = 1e-4;
    std::size_t diffusion_steps = 500;
    std::size_t window = 75;
    std::size_t context = 10;
    std::size_t width = 512;
    std::size_t layers = 6;
    std::size_t heads = 8;
    std::size_t radius = 1;
    bool causal_mask = false;
    double p_drop_audio = 0.1;
    double p_drop_cond = 0.1;
    double grad_clip = 1.0;
    LossWeights weights;
    std::uint64_t seed = 0;
    Ablations ablations;

    void validate() const;
};

/// Small configuration used by the desk-scale runs.
TrainConfig desk_train_config();

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);
/// Names of fields whose values differ.
std::vector<std::string> config_differences(const TrainConfig& a, const TrainConfig& b);

/// Data-dependent sizes that fix the parameter shapes.
struct ModelDims {
    std::size_t n_expr = 53;
    std::size_t n_shape = 80;
    std::size_t d_audio = 16;
    std::size_t d_text = 8;
    std::size_t d_style = 32;
    std::vector<std::string> languages;
};

/// Per-sample condition values in their raw form.
struct SampleCondition {
    std::vector<float> beta;
    std::vector<float> t_hat;
    std::vector<float> style;
    std::string language;
};

/// Denoiser plus condition fusion and the optional language table.
struct PolyglotModel {
    TrainConfig config;
    ModelDims dims;
    ConditionFuser fuser;
    Denoiser denoiser;
    nn::Tensor language_table;  // defined only with lookup_table_language

    static PolyglotModel create(const TrainConfig& config, const ModelDims& dims);
    [[nodiscard]] nn::ParamList params() const;

    /// t_hat after the ablation switches; `drop` selects the null embedding.
    [[nodiscard]] nn::Tensor text_condition(const SampleCondition& cond, bool drop) const;
    [[nodiscard]] nn::Tensor style_condition(const SampleCondition& cond, bool drop) const;

    /// Differentiable (T_p+T_w) x k estimate. `prev_clean`/`prev_audio` must
    /// already hold the start features for a first window.
    [[nodiscard]] nn::Tensor forward(const nn::Tensor& prev_clean, const nn::Tensor& noisy, const nn::Tensor& prev_audio,
                                     const nn::Tensor& cur_audio, const SampleCondition& cond, std::size_t n,
                                     bool drop_audio, bool drop_cond) const;

    [[nodiscard]] Estimator estimator(const SampleCondition& cond) const;
    [[nodiscard]] Matrix start_motion() const { return denoiser.start_motion.to_matrix(); }
    [[nodiscard]] Matrix start_audio() const { return denoiser.start_audio.to_matrix(); }

    /// Full-length sample from audio features.
    [[nodiscard]] Matrix sample(const Matrix& audio, const SampleCondition& cond, const GuidanceConfig& guidance,
                                std::uint64_t seed) const;
    /// Sample with the fully conditioned estimate only, no guidance branches.
    [[nodiscard]] Matrix sample_unguided(const Matrix& audio, const SampleCondition& cond, std::uint64_t seed) const;
};

struct StepReport {
    double loss = 0.0;
    double grad_norm = 0.0;
};

class Trainer {
public:
    Trainer(TrainConfig config, const MorphableModel& face, StyleEncoder style, std::vector<SampleData> data);

    /// One optimizer update. Throws NumericError on a non-finite loss without
    /// touching any parameter.
    StepReport step();
    void run(std::size_t steps);
    /// Step budget: `steps` if set, else epochs times batches per epoch.
    [[nodiscard]] std::size_t planned_steps() const;
    void set_step_budget(std::size_t steps) noexcept { config_.steps = steps; }

    [[nodiscard]] std::size_t steps_done() const noexcept { return step_; }
    [[nodiscard]] const std::vector<double>& loss_log() const noexcept { return losses_; }
    [[nodiscard]] const PolyglotModel& model() const noexcept { return model_; }
    [[nodiscard]] PolyglotModel& model() noexcept { return model_; }
    [[nodiscard]] const StyleEncoder& style_encoder() const noexcept { return style_; }
    [[nodiscard]] const TrainConfig& config() const noexcept { return config_; }
    [[nodiscard]] const nn::Adam& optimizer() const noexcept { return adam_; }

    /// Loss of one window, for probes and tests.
    [[nodiscard]] nn::Tensor window_loss(const TrainingWindow& window, std::size_t n, const Matrix& noise,
                                         bool drop_audio, bool drop_cond) const;

    void save(const std::filesystem::path& path) const;
    /// Restores weights, optimizer moments and step; `data` must be the same set.
    static Trainer resume(const std::filesystem::path& path, const MorphableModel& face, std::vector<SampleData> data);

private:
    TrainConfig config_;
    MorphableModel face_;
    MeshSynthesizer synth_;
    StyleEncoder style_;
    std::vector<SampleData> data_;
    std::vector<std::vector<float>> style_refs_;
    std::vector<nn::Tensor> offsets_;
    DiffusionSchedule schedule_;
    PolyglotModel model_;
    nn::Adam adam_;
    WindowSampler sampler_;
    std::size_t step_ = 0;
    std::vector<double> losses_;
};

ModelDims infer_dims(const std::vector<SampleData>& data, std::size_t d_style);
SampleCondition make_condition(const SampleData& sample, std::vector<float> style);

/// Saved checkpoint contents needed for inference.
struct LoadedCheckpoint {
    PolyglotModel model;
    StyleEncoder style;
    std::size_t step = 0;
};
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

/// Samples every `targets[i]` with the style of `style_refs[i]` and scores
/// it against its own ground truth.
MetricReport evaluate_model(const PolyglotModel& model, const StyleEncoder& style, const MorphableModel& face,
                            const std::vector<SampleData>& targets, const std::vector<const SampleData*>& style_refs,
                            const GuidanceConfig& guidance, std::uint64_t seed);

}  // namespace polyglot
