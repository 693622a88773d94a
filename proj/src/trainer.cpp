#include "polyglot/trainer.hpp"

#include <cmath>
#include <map>

#include "polyglot/checkpoint.hpp"
#include "polyglot/errors.hpp"
#include "polyglot/numerics/ops.hpp"

namespace polyglot {

namespace fs = std::filesystem;
using nlohmann::json;
using nn::Tensor;

void Ablations::validate() const {
    if (lookup_table_language && no_text_t) {
        throw DataError("ablations: lookup_table_language replaces t_hat and cannot be combined with no_text_t");
    }
}

void TrainConfig::validate() const {
    if (batch == 0 || diffusion_steps == 0 || window == 0 || width == 0 || layers == 0 || heads == 0) {
        throw DataError("train config: sizes must be positive");
    }
    if (context >= window) {
        throw DataError("train config: T_p must be smaller than T_w");
    }
    if (width % heads != 0) {
        throw DataError("train config: width must be divisible by heads");
    }
    if (!(p_drop_audio >= 0.0 && p_drop_audio <= 1.0 && p_drop_cond >= 0.0 && p_drop_cond <= 1.0)) {
        throw DataError("train config: dropout probabilities must lie in [0, 1]");
    }
    const LossWeights& w = weights;
    if (w.simple < 0 || w.mouth < 0 || w.style < 0 || w.vertex < 0 || w.velocity < 0 || w.smooth < 0) {
        throw DataError("train config: loss weights must be nonnegative");
    }
    ablations.validate();
}

TrainConfig desk_train_config() {
    TrainConfig c;
    c.epochs = 0;
    c.steps = 2000;
    c.batch = 4;
    c.learning_rate = 1e-3;
    c.diffusion_steps = 50;
    c.window = 16;
    c.context = 4;
    c.width = 64;
    c.layers = 2;
    c.heads = 2;
    return c;
}

void to_json(json& j, const TrainConfig& c) {
    j = json{{"epochs", c.epochs},
             {"steps", c.steps},
             {"batch", c.batch},
             {"learning_rate", c.learning_rate},
             {"diffusion_steps", c.diffusion_steps},
             {"window", c.window},
             {"context", c.context},
             {"width", c.width},
             {"layers", c.layers},
             {"heads", c.heads},
             {"radius", c.radius},
             {"causal_mask", c.causal_mask},
             {"p_drop_audio", c.p_drop_audio},
             {"p_drop_cond", c.p_drop_cond},
             {"grad_clip", c.grad_clip},
             {"lambda_sim", c.weights.simple},
             {"lambda_mouth", c.weights.mouth},
             {"lambda_style", c.weights.style},
             {"lambda_v", c.weights.vertex},
             {"lambda_vel", c.weights.velocity},
             {"lambda_s", c.weights.smooth},
             {"seed", c.seed},
             {"no_style_S", c.ablations.no_style_S},
             {"no_text_t", c.ablations.no_text_t},
             {"no_style_loss", c.ablations.no_style_loss},
             {"lookup_table_language", c.ablations.lookup_table_language}};
}

void from_json(const json& j, TrainConfig& c) {
    const TrainConfig d;
    c.epochs = j.value("epochs", d.epochs);
    c.steps = j.value("steps", d.steps);
    c.batch = j.value("batch", d.batch);
    c.learning_rate = j.value("learning_rate", d.learning_rate);
    c.diffusion_steps = j.value("diffusion_steps", d.diffusion_steps);
    c.window = j.value("window", d.window);
    c.context = j.value("context", d.context);
    c.width = j.value("width", d.width);
    c.layers = j.value("layers", d.layers);
    c.heads = j.value("heads", d.heads);
    c.radius = j.value("radius", d.radius);
    c.causal_mask = j.value("causal_mask", d.causal_mask);
    c.p_drop_audio = j.value("p_drop_audio", d.p_drop_audio);
    c.p_drop_cond = j.value("p_drop_cond", d.p_drop_cond);
    c.grad_clip = j.value("grad_clip", d.grad_clip);
    c.weights.simple = j.value("lambda_sim", d.weights.simple);
    c.weights.mouth = j.value("lambda_mouth", d.weights.mouth);
    c.weights.style = j.value("lambda_style", d.weights.style);
    c.weights.vertex = j.value("lambda_v", d.weights.vertex);
    c.weights.velocity = j.value("lambda_vel", d.weights.velocity);
    c.weights.smooth = j.value("lambda_s", d.weights.smooth);
    c.seed = j.value("seed", d.seed);
    c.ablations.no_style_S = j.value("no_style_S", false);
    c.ablations.no_text_t = j.value("no_text_t", false);
    c.ablations.no_style_loss = j.value("no_style_loss", false);
    c.ablations.lookup_table_language = j.value("lookup_table_language", false);
}

std::vector<std::string> config_differences(const TrainConfig& a, const TrainConfig& b) {
    const json ja = a;
    const json jb = b;
    std::vector<std::string> out;
    for (const auto& [key, value] : ja.items()) {
        if (!jb.contains(key) || jb[key] != value) {
            out.push_back(key);
        }
    }
    return out;
}

PolyglotModel PolyglotModel::create(const TrainConfig& config, const ModelDims& dims) {
    config.validate();
    Rng rng(config.seed, 0xD3A0);
    PolyglotModel m;
    m.config = config;
    m.dims = dims;
    ConditionConfig cc;
    cc.d_text = dims.d_text;
    cc.n_shape = dims.n_shape;
    cc.d_style = dims.d_style;
    cc.d_audio = dims.d_audio;
    cc.width = config.width;
    cc.n_steps = config.diffusion_steps;
    m.fuser = ConditionFuser::create(cc, rng);
    DenoiserConfig dc;
    dc.n_expr = dims.n_expr;
    dc.d_audio = dims.d_audio;
    dc.width = config.width;
    dc.layers = config.layers;
    dc.heads = config.heads;
    dc.window = config.window;
    dc.context = config.context;
    dc.radius = config.radius;
    dc.causal = config.causal_mask;
    m.denoiser = Denoiser::create(dc, rng);
    if (config.ablations.lookup_table_language) {
        const std::size_t rows = std::max<std::size_t>(1, dims.languages.size());
        std::vector<nn::Real> table(rows * dims.d_text);
        for (auto& v : table) {
            v = static_cast<nn::Real>(0.1 * rng.normal());
        }
        m.language_table = Tensor::parameter({rows, dims.d_text}, std::move(table));
    }
    return m;
}

nn::ParamList PolyglotModel::params() const {
    nn::ParamList out;
    fuser.collect(out, "cond");
    denoiser.collect(out, "denoiser");
    if (language_table.defined()) {
        out.push_back({"cond.language_table", language_table});
    }
    return out;
}

Tensor PolyglotModel::text_condition(const SampleCondition& cond, bool drop) const {
    if (drop || config.ablations.no_text_t) {
        return fuser.null_text;
    }
    if (config.ablations.lookup_table_language) {
        const auto it = std::find(dims.languages.begin(), dims.languages.end(), cond.language);
        if (it == dims.languages.end()) {
            throw DataError("language '" + cond.language + "' is not in the lookup table");
        }
        const std::size_t id = static_cast<std::size_t>(it - dims.languages.begin());
        return nn::reshape(nn::gather_rows(language_table, std::span<const std::size_t>(&id, 1)), {dims.d_text});
    }
    if (cond.t_hat.size() != dims.d_text) {
        throw ShapeError("t_hat width does not match the checkpoint");
    }
    return Tensor::from_vector(cond.t_hat);
}

Tensor PolyglotModel::style_condition(const SampleCondition& cond, bool drop) const {
    if (drop || config.ablations.no_style_S) {
        return fuser.null_style;
    }
    if (cond.style.size() != dims.d_style) {
        throw ShapeError("style embedding width does not match the checkpoint");
    }
    return Tensor::from_vector(cond.style);
}

Tensor PolyglotModel::forward(const Tensor& prev_clean, const Tensor& noisy, const Tensor& prev_audio,
                              const Tensor& cur_audio, const SampleCondition& cond, std::size_t n, bool drop_audio,
                              bool drop_cond) const {
    if (cond.beta.size() != dims.n_shape) {
        throw ShapeError("beta width does not match the checkpoint");
    }
    const Tensor c = fuser.fuse(text_condition(cond, drop_cond), Tensor::from_vector(cond.beta),
                                style_condition(cond, drop_cond), n);
    return denoiser.forward(prev_clean, noisy, fuser.audio_or_null(prev_audio, drop_audio),
                            fuser.audio_or_null(cur_audio, drop_audio), c);
}

Estimator PolyglotModel::estimator(const SampleCondition& cond) const {
    return [this, cond](const WindowInputs& in, std::size_t n, bool audio_on, bool cond_on) {
        nn::NoGradGuard guard;
        return forward(Tensor::from_matrix(in.prev_clean), Tensor::from_matrix(in.noisy),
                       Tensor::from_matrix(in.prev_audio), Tensor::from_matrix(in.cur_audio), cond, n, !audio_on,
                       !cond_on)
            .to_matrix();
    };
}

Matrix PolyglotModel::sample(const Matrix& audio, const SampleCondition& cond, const GuidanceConfig& guidance,
                             std::uint64_t seed) const {
    if (audio.cols != dims.d_audio) {
        throw ShapeError("audio feature width does not match the checkpoint");
    }
    const DiffusionSchedule schedule = cosine_schedule(config.diffusion_steps);
    return sample_sequence(estimator(cond), schedule, audio, start_motion(), start_audio(), config.window, guidance,
                           Rng(seed, 0x5A3B1E));
}

Matrix PolyglotModel::sample_unguided(const Matrix& audio, const SampleCondition& cond, std::uint64_t seed) const {
    if (audio.cols != dims.d_audio) {
        throw ShapeError("audio feature width does not match the checkpoint");
    }
    const Estimator full = estimator(cond);
    const Estimator conditional = [full](const WindowInputs& in, std::size_t n, bool, bool) {
        return full(in, n, true, true);
    };
    const DiffusionSchedule schedule = cosine_schedule(config.diffusion_steps);
    return sample_sequence(conditional, schedule, audio, start_motion(), start_audio(), config.window,
                           GuidanceConfig{0.0, 0.0}, Rng(seed, 0x5A3B1E));
}

ModelDims infer_dims(const std::vector<SampleData>& data, std::size_t d_style) {
    if (data.empty()) {
        throw DataError("training set is empty");
    }
    ModelDims d;
    const SampleData& first = data.front();
    d.n_expr = first.expressions.cols;
    d.d_audio = first.audio.cols;
    d.d_text = first.t_hat.size();
    d.n_shape = first.beta.size();
    d.d_style = d_style;
    for (const auto& s : data) {
        if (s.expressions.cols != d.n_expr || s.audio.cols != d.d_audio || s.t_hat.size() != d.d_text ||
            s.beta.size() != d.n_shape) {
            throw DataError("sample " + s.record.id + ": array widths differ from the rest of the set");
        }
        if (std::find(d.languages.begin(), d.languages.end(), s.record.language) == d.languages.end()) {
            d.languages.push_back(s.record.language);
        }
    }
    std::sort(d.languages.begin(), d.languages.end());
    return d;
}

SampleCondition make_condition(const SampleData& sample, std::vector<float> style) {
    return {sample.beta, sample.t_hat, std::move(style), sample.record.language};
}

namespace {

StyleEncoder frozen_copy(const StyleEncoder& source) {
    Rng rng(0);
    StyleEncoder copy = StyleEncoder::create(source.config, rng);
    nn::ParamList from;
    nn::ParamList to;
    source.collect(from, "style");
    copy.collect(to, "style");
    nn::copy_values(from, to);
    nn::set_requires_grad(to, false);
    return copy;
}

std::vector<std::size_t> lengths_of(const std::vector<SampleData>& data) {
    std::vector<std::size_t> out;
    for (const auto& s : data) {
        out.push_back(s.expressions.rows);
    }
    return out;
}

}  // namespace

Trainer::Trainer(TrainConfig config, const MorphableModel& face, StyleEncoder style, std::vector<SampleData> data)
    : config_(std::move(config)),
      face_(face),
      synth_(face),
      style_(frozen_copy(style)),
      data_(std::move(data)),
      schedule_(cosine_schedule(config_.diffusion_steps)),
      model_(PolyglotModel::create(config_, infer_dims(data_, style_.config.width))),
      adam_(nn::tensors_of(model_.params()), {.learning_rate = config_.learning_rate}),
      sampler_(lengths_of(data_), config_.window, config_.context, config_.batch, config_.seed) {
    if (model_.dims.n_expr != face_.n_expr || model_.dims.n_shape != face_.n_shape) {
        throw DataError("training data widths do not match the morphable model");
    }
    if (style_.config.n_expr != face_.n_expr) {
        throw DataError("style encoder k does not match the morphable model");
    }
    for (const auto& s : data_) {
        style_refs_.push_back(style_.embed(s.expressions));
        nn::NoGradGuard guard;
        offsets_.push_back(synth_.identity_offset(s.beta));
    }
}

Tensor Trainer::window_loss(const TrainingWindow& w, std::size_t n, const Matrix& noise, bool drop_audio,
                            bool drop_cond) const {
    const SampleData& sample = data_.at(w.sample);
    const SampleCondition cond = make_condition(sample, style_refs_[w.sample]);
    const Tensor noisy = Tensor::from_matrix(q_sample(schedule_, w.expressions, n, noise));
    const Tensor prev_clean = w.is_start ? model_.denoiser.start_motion : Tensor::from_matrix(w.prev_expressions);
    const Tensor prev_audio = w.is_start ? model_.denoiser.start_audio : Tensor::from_matrix(w.prev_audio);
    Tensor pred = model_.forward(prev_clean, noisy, prev_audio, Tensor::from_matrix(w.audio), cond, n, drop_audio,
                                 drop_cond);
    Tensor gt;
    if (w.is_start) {
        // The start context is learned, not ground truth: score the current frames only.
        pred = nn::slice_rows(pred, config_.context, config_.context + config_.window);
        gt = Tensor::from_matrix(w.expressions);
    } else {
        gt = Tensor::from_matrix(vstack(w.prev_expressions, w.expressions));
    }
    const auto& weights = config_.weights;
    LossParts parts;
    parts.simple = loss_simple(pred, gt, face_.mouth_param_ids, weights.mouth);
    if (!config_.ablations.no_style_loss && weights.style != 0.0) {
        parts.style = loss_style(style_, pred, Tensor::from_vector(style_refs_[w.sample]));
    }
    const Tensor& offset = offsets_[w.sample];
    const Tensor pred_mesh = synth_.meshes(pred, offset);
    Tensor gt_mesh;
    {
        nn::NoGradGuard guard;
        gt_mesh = synth_.meshes(gt, offset);
    }
    const GeometricLosses geo = loss_geometric(pred_mesh, gt_mesh);
    parts.vertex = geo.vertex;
    parts.velocity = geo.velocity;
    parts.smooth = geo.smooth;
    return total_loss(parts, weights);
}

StepReport Trainer::step() {
    Rng rng = Rng(config_.seed, 0x7A41).fork(step_);
    const auto refs = sampler_.batch(step_);
    adam_.zero_grad();
    const auto inv_batch = static_cast<nn::Real>(1.0 / static_cast<double>(refs.size()));
    double total = 0.0;
    for (const auto& ref : refs) {
        const TrainingWindow w = make_window(data_[ref.sample], ref.sample, ref.start, config_.window, config_.context);
        const auto n = static_cast<std::size_t>(rng.uniform_int(1, static_cast<std::int64_t>(config_.diffusion_steps)));
        const Matrix noise = standard_normal(config_.window, model_.dims.n_expr, rng);
        const bool drop_audio = rng.bernoulli(config_.p_drop_audio);
        const bool drop_cond = rng.bernoulli(config_.p_drop_cond);
        const Tensor loss = nn::scale(window_loss(w, n, noise, drop_audio, drop_cond), inv_batch);
        if (!std::isfinite(loss.item())) {
            adam_.zero_grad();
            throw NumericError("train: non-finite loss at step " + std::to_string(step_));
        }
        loss.backward();
        total += loss.item();
    }
    StepReport report;
    report.loss = total;
    report.grad_norm = nn::clip_grad_norm(adam_.params(), config_.grad_clip);
    adam_.step();
    ++step_;
    losses_.push_back(total);
    return report;
}

std::size_t Trainer::planned_steps() const {
    if (config_.steps > 0) {
        return config_.steps;
    }
    const std::size_t per_epoch = (sampler_.epoch(0).size() + config_.batch - 1) / config_.batch;
    return config_.epochs * per_epoch;
}

void Trainer::run(std::size_t steps) {
    for (std::size_t i = 0; i < steps; ++i) {
        step();
    }
}

namespace {

const char* kCheckpointKind = "polyglot";

json dims_json(const ModelDims& d) {
    return json{{"k", d.n_expr},    {"p", d.n_shape},       {"d_a", d.d_audio}, {"d_t", d.d_text},
                {"h_style", d.d_style}, {"languages", d.languages}};
}

ModelDims dims_from_json(const json& j) {
    ModelDims d;
    d.n_expr = j.at("k").get<std::size_t>();
    d.n_shape = j.at("p").get<std::size_t>();
    d.d_audio = j.at("d_a").get<std::size_t>();
    d.d_text = j.at("d_t").get<std::size_t>();
    d.d_style = j.at("h_style").get<std::size_t>();
    d.languages = j.at("languages").get<std::vector<std::string>>();
    return d;
}

struct CheckpointFiles {
    json meta;
    PafFile arrays;
};

CheckpointFiles read_checkpoint(const fs::path& path) {
    CheckpointFiles f;
    f.meta = read_json_file(sidecar_path(path));
    check_checkpoint_header(f.meta, kCheckpointKind);
    f.arrays = PafFile::read(path);
    return f;
}

StyleEncoder style_from(const CheckpointFiles& f) {
    Rng rng(0);
    StyleEncoder style = StyleEncoder::create(f.meta.at("style_config").get<StyleConfig>(), rng);
    nn::ParamList params;
    style.collect(params, "style");
    load_params(f.arrays, params);
    nn::set_requires_grad(params, false);
    return style;
}

}  // namespace

void Trainer::save(const fs::path& path) const {
    PafFile file;
    const nn::ParamList params = model_.params();
    add_params(file, params);
    nn::ParamList style_params;
    style_.collect(style_params, "style");
    add_params(file, style_params);
    const auto& state = adam_.state();
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto& shape = params[i].tensor.shape();
        PafArray m;
        PafArray v;
        for (std::size_t d : shape) {
            m.dims.push_back(static_cast<std::uint32_t>(d));
        }
        v.dims = m.dims;
        m.values.assign(state.first_moment[i].begin(), state.first_moment[i].end());
        v.values.assign(state.second_moment[i].begin(), state.second_moment[i].end());
        file.set("adam.m." + params[i].name, std::move(m));
        file.set("adam.v." + params[i].name, std::move(v));
    }
    file.write(path);
    json meta{{"kind", kCheckpointKind},
              {"version", kCheckpointVersion},
              {"config", config_},
              {"dims", dims_json(model_.dims)},
              {"style_config", style_.config},
              {"step", step_},
              {"adam_step", state.step},
              {"rng", {{"seed", config_.seed}, {"next_step", step_}}},
              {"losses", losses_}};
    write_json_file(sidecar_path(path), meta);
}

Trainer Trainer::resume(const fs::path& path, const MorphableModel& face, std::vector<SampleData> data) {
    const CheckpointFiles f = read_checkpoint(path);
    TrainConfig config;
    try {
        config = f.meta.at("config").get<TrainConfig>();
    } catch (const json::exception& e) {
        throw DataError(std::string("checkpoint config: ") + e.what());
    }
    Trainer t(config, face, style_from(f), std::move(data));
    const ModelDims stored = dims_from_json(f.meta.at("dims"));
    if (stored.languages != t.model_.dims.languages || stored.d_audio != t.model_.dims.d_audio ||
        stored.d_text != t.model_.dims.d_text) {
        throw DataError("resume: data set does not match the checkpoint");
    }
    const nn::ParamList params = t.model_.params();
    load_params(f.arrays, params);
    auto& state = t.adam_.state();
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto& m = f.arrays.get("adam.m." + params[i].name).values;
        const auto& v = f.arrays.get("adam.v." + params[i].name).values;
        if (m.size() != state.first_moment[i].size() || v.size() != state.second_moment[i].size()) {
            throw DataError("resume: optimizer state shape mismatch for " + params[i].name);
        }
        std::copy(m.begin(), m.end(), state.first_moment[i].begin());
        std::copy(v.begin(), v.end(), state.second_moment[i].begin());
    }
    state.step = f.meta.at("adam_step").get<std::int64_t>();
    t.step_ = f.meta.at("step").get<std::size_t>();
    t.losses_ = f.meta.value("losses", std::vector<double>{});
    return t;
}

LoadedCheckpoint load_checkpoint(const fs::path& path) {
    const CheckpointFiles f = read_checkpoint(path);
    LoadedCheckpoint out;
    try {
        out.model = PolyglotModel::create(f.meta.at("config").get<TrainConfig>(), dims_from_json(f.meta.at("dims")));
        out.style = style_from(f);
        out.step = f.meta.at("step").get<std::size_t>();
    } catch (const json::exception& e) {
        throw DataError(std::string("checkpoint metadata: ") + e.what());
    }
    load_params(f.arrays, out.model.params());
    return out;
}

MetricReport evaluate_model(const PolyglotModel& model, const StyleEncoder& style, const MorphableModel& face,
                            const std::vector<SampleData>& targets, const std::vector<const SampleData*>& style_refs,
                            const GuidanceConfig& guidance, std::uint64_t seed) {
    if (style_refs.size() != targets.size()) {
        throw ShapeError("evaluate_model: one style reference per target required");
    }
    MetricReport report;
    report.distance_units = face.units == "meters" ? "mm" : face.units;
    for (std::size_t i = 0; i < targets.size(); ++i) {
        const SampleData& target = targets[i];
        const SampleCondition cond = make_condition(target, style.embed(style_refs[i]->expressions));
        const Matrix pred = model.sample(target.audio, cond, guidance, Rng(seed).fork(i).next_u64());
        const MeshSeq pm = expressions_to_meshes(face, target.beta, ExpressionSeq{pred, kMotionFps});
        const MeshSeq gm = expressions_to_meshes(face, target.beta, ExpressionSeq{target.expressions, kMotionFps});
        report.add(target.record.language, evaluate_pair(pm, gm, face));
    }
    return report;
}

}  // namespace polyglot
