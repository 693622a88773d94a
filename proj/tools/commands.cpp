#include "commands.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "polyglot/checkpoint.hpp"
#include "polyglot/dataset.hpp"
#include "polyglot/errors.hpp"
#include "polyglot/metrics.hpp"
#include "polyglot/morphable.hpp"
#include "polyglot/paf.hpp"
#include "polyglot/style.hpp"
#include "polyglot/synthetic.hpp"
#include "polyglot/trainer.hpp"

namespace polyglot::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

bool ci_mode() {
    const char* v = std::getenv("POLYGLOT_CI");
    return v != nullptr && std::string(v) == "1";
}

void require_seed(const CLI::Option* seed_opt) {
    if (ci_mode() && seed_opt->count() == 0) {
        throw UsageError("--seed is required when POLYGLOT_CI=1");
    }
}

void ensure_parent(const fs::path& p) {
    if (p.has_parent_path()) {
        fs::create_directories(p.parent_path());
    }
}

const PafArray& named_array(const PafFile& file, const std::string& name, const fs::path& path) {
    if (file.contains(name)) {
        return file.get(name);
    }
    if (file.entries().size() == 1) {
        return file.entries().front().second;
    }
    throw DataError(path.string() + ": no array named '" + name + "'");
}

Matrix read_matrix(const fs::path& path, const std::string& name) {
    const PafFile f = PafFile::read(path);
    const PafArray& a = named_array(f, name, path);
    if (a.dims.size() != 2) {
        throw DataError(path.string() + ": '" + name + "' must be rank 2");
    }
    if (f.contains("fps")) {
        const auto& fps = f.get("fps").values;
        if (fps.size() != 1 || fps[0] != static_cast<float>(kMotionFps)) {
            throw DataError(path.string() + ": fps must be 25");
        }
    }
    return a.to_matrix();
}

std::vector<float> read_vector(const fs::path& path, const std::string& name) {
    const PafFile f = PafFile::read(path);
    return named_array(f, name, path).values;
}

void write_expressions(const fs::path& path, const Matrix& frames) {
    ensure_parent(path);
    PafFile f;
    f.set("expressions", PafArray::from_matrix(frames));
    f.set("fps", PafArray::from_vector(std::vector<float>{static_cast<float>(kMotionFps)}));
    f.write(path);
}

void write_mesh_paf(const fs::path& path, const MeshSeq& mesh) {
    ensure_parent(path);
    PafArray a;
    a.dims = {static_cast<std::uint32_t>(mesh.length()), static_cast<std::uint32_t>(mesh.n_vertices), 3};
    a.values = mesh.positions.data;
    PafFile f;
    f.set("vertices", std::move(a));
    f.set("fps", PafArray::from_vector(std::vector<float>{static_cast<float>(mesh.fps)}));
    f.write(path);
}

std::string fmt(double v) {
    std::ostringstream s;
    s << std::setprecision(17) << v;
    return s.str();
}

json metrics_json(const MetricValues& m) { return json{{"lve", m.lve}, {"mve", m.mve}, {"dtw", m.dtw}, {"mod", m.mod}}; }

// Style reference for evaluation: another sequence of the same speaker.
const SampleData* same_speaker_reference(const std::vector<SampleData>& pool, const SampleData& target) {
    const SampleData* fallback = &target;
    const SampleData* best = nullptr;
    for (const auto& s : pool) {
        if (s.record.speaker == target.record.speaker && s.record.id != target.record.id &&
            (best == nullptr || s.record.id < best->record.id)) {
            best = &s;
        }
    }
    return best != nullptr ? best : fallback;
}

void write_loss_log(const fs::path& path, const std::vector<double>& losses) {
    ensure_parent(path);
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot write " + path.string());
    }
    out << "step,loss\n";
    for (std::size_t i = 0; i < losses.size(); ++i) {
        out << i << ',' << fmt(losses[i]) << '\n';
    }
}

// ---------------------------------------------------------------------------

struct FilterArgs {
    std::string manifest, out, rejected;
};

void cmd_filter(const FilterArgs& a, std::ostream& out) {
    const Manifest m = load_manifest(a.manifest);
    const FilterResult r = filter_manifest(m.records);
    save_manifest(a.out, r.kept, m.base_dir);
    if (!a.rejected.empty()) {
        json rej = json::array();
        for (const auto& x : r.rejected) {
            rej.push_back({{"id", x.record.id}, {"reason", x.reason}});
        }
        ensure_parent(a.rejected);
        write_json_file(a.rejected, rej);
    }
    out << "kept " << r.kept.size() << " rejected " << r.rejected.size() << '\n';
}

struct SplitArgs {
    std::string manifest, out;
    std::uint64_t seed = 0;
    SplitSpec spec;
};

void cmd_split(const SplitArgs& a, std::ostream& out, std::ostream& err) {
    const Manifest m = load_manifest(a.manifest);
    const SplitResult r = split_by_language(m.records, a.spec, a.seed);
    for (const auto& w : r.warnings) {
        err << "polyglot: warning: " << w << '\n';
    }
    const fs::path dir(a.out);
    save_manifest(dir / "train.json", r.train, m.base_dir);
    save_manifest(dir / "val.json", r.val, m.base_dir);
    save_manifest(dir / "test.json", r.test, m.base_dir);
    out << "train " << r.train.size() << " val " << r.val.size() << " test " << r.test.size() << '\n';
}

struct SynthArgs {
    std::string out;
    SyntheticSetSpec spec;
    std::uint64_t model_seed = 7;
};

void cmd_gen_synthetic(const SynthArgs& a, std::ostream& out) {
    SyntheticModelSpec ms;
    ms.seed = a.model_seed;
    const MorphableModel model = make_synthetic_model(ms);
    const auto samples = generate_polyset(a.spec, model);
    write_polyset(a.out, samples);
    save_model(model, fs::path(a.out) / "model.paf");
    out << "wrote " << samples.size() << " samples to " << a.out << '\n';
}

struct StyleArgs {
    std::string manifest, out, log;
    StyleConfig model;
    StyleTrainConfig train;
};

void cmd_train_style(const StyleArgs& a, std::ostream& out) {
    const Manifest m = load_manifest(a.manifest);
    std::vector<Matrix> seqs;
    for (const auto& s : load_samples(m)) {
        seqs.push_back(s.expressions);
    }
    if (seqs.empty()) {
        throw DataError("train-style: manifest has no records");
    }
    StyleConfig cfg = a.model;
    cfg.n_expr = seqs.front().cols;
    StyleAutoencoder ae = StyleAutoencoder::create(cfg, a.train.seed);
    const double before = style_reconstruction_mse(ae, seqs);
    const StyleTrainResult r = train_style_autoencoder(ae, seqs, a.train);
    const double after = style_reconstruction_mse(ae, seqs);
    ensure_parent(a.out);
    save_style_checkpoint(a.out, ae);
    if (!a.log.empty()) {
        write_loss_log(a.log, r.losses);
    }
    out << "style reconstruction mse " << fmt(before) << " -> " << fmt(after) << '\n';
}

struct TrainArgs {
    std::string manifest, style, model, out, log, resume;
    TrainConfig config;
    CLI::Option* steps_opt = nullptr;
};

void cmd_train(TrainArgs a, std::ostream& out, std::ostream& err) {
    const Manifest m = load_manifest(a.manifest);
    std::vector<SampleData> data = load_samples(m);
    const MorphableModel face = load_model(a.model);
    a.config.validate();
    std::optional<Trainer> trainer;
    if (!a.resume.empty()) {
        trainer.emplace(Trainer::resume(a.resume, face, std::move(data)));
        for (const auto& key : config_differences(a.config, trainer->config())) {
            if (key != "steps") {
                err << "polyglot: warning: supplied " << key << " differs from the checkpoint snapshot; using the snapshot\n";
            }
        }
        if (a.steps_opt->count() > 0) {
            trainer->set_step_budget(a.config.steps);
        }
    } else {
        StyleEncoder style;
        if (!a.style.empty()) {
            style = load_style_checkpoint(a.style).encoder;
        } else if (a.config.ablations.no_style_S) {
            // No reference encoder: S is always null, so the style loss is off too.
            StyleConfig sc;
            sc.n_expr = face.n_expr;
            Rng rng(a.config.seed, 0x57);
            style = StyleEncoder::create(sc, rng);
            a.config.ablations.no_style_loss = true;
        } else {
            throw UsageError("train: --style is required unless --no-style-S is set");
        }
        trainer.emplace(a.config, face, std::move(style), std::move(data));
    }
    const std::size_t target = trainer->planned_steps();
    try {
        while (trainer->steps_done() < target) {
            trainer->step();
        }
    } catch (const NumericError&) {
        ensure_parent(a.out);
        trainer->save(a.out);
        if (!a.log.empty()) {
            write_loss_log(a.log, trainer->loss_log());
        }
        throw;
    }
    ensure_parent(a.out);
    trainer->save(a.out);
    if (!a.log.empty()) {
        write_loss_log(a.log, trainer->loss_log());
    }
    const auto& log = trainer->loss_log();
    out << "trained " << trainer->steps_done() << " steps, final loss " << (log.empty() ? 0.0 : log.back()) << '\n';
}

struct SampleArgs {
    std::string checkpoint, audio, t_hat, beta, style_ref, language, out, manifest, model, mesh_out;
    std::vector<double> guidance{1.15, 1.15};
    std::uint64_t seed = 0;
    bool no_guidance = false;
};

Matrix run_sampler(const LoadedCheckpoint& ck, const SampleArgs& a, const Matrix& audio, const SampleCondition& cond,
                   std::uint64_t seed) {
    if (a.no_guidance) {
        return ck.model.sample_unguided(audio, cond, seed);
    }
    return ck.model.sample(audio, cond, GuidanceConfig{a.guidance.at(0), a.guidance.at(1)}, seed);
}

void cmd_sample(const SampleArgs& a, std::ostream& out) {
    const LoadedCheckpoint ck = load_checkpoint(a.checkpoint);
    if (!a.manifest.empty()) {
        const Manifest m = load_manifest(a.manifest);
        const auto samples = load_samples(m);
        for (std::size_t i = 0; i < samples.size(); ++i) {
            const SampleData& s = samples[i];
            const SampleData* ref = same_speaker_reference(samples, s);
            const SampleCondition cond = make_condition(s, ck.style.embed(ref->expressions));
            const Matrix pred = run_sampler(ck, a, s.audio, cond, Rng(a.seed).fork(i).next_u64());
            write_expressions(fs::path(a.out) / (s.record.id + ".paf"), pred);
        }
        out << "sampled " << samples.size() << " sequences into " << a.out << '\n';
        return;
    }
    if (a.audio.empty() || a.beta.empty() || a.style_ref.empty()) {
        throw UsageError("sample: --audio-feats, --beta and --style-ref are required without --manifest");
    }
    const Matrix audio = read_matrix(a.audio, "audio_feats");
    SampleCondition cond;
    cond.beta = read_vector(a.beta, "beta");
    cond.t_hat = a.t_hat.empty() ? std::vector<float>(ck.model.dims.d_text, 0.0F) : read_vector(a.t_hat, "t_hat");
    cond.style = ck.style.embed(read_matrix(a.style_ref, "expressions"));
    cond.language = a.language;
    const Matrix pred = run_sampler(ck, a, audio, cond, a.seed);
    write_expressions(a.out, pred);
    if (!a.mesh_out.empty()) {
        if (a.model.empty()) {
            throw UsageError("sample: --mesh-out needs --model");
        }
        const MorphableModel face = load_model(a.model);
        write_mesh_paf(a.mesh_out, expressions_to_meshes(face, cond.beta, ExpressionSeq{pred, kMotionFps}));
    }
    out << "sampled " << pred.rows << " frames\n";
}

struct EvalArgs {
    std::string pred_dir, manifest, model, out, csv;
};

void cmd_eval(const EvalArgs& a, std::ostream& out) {
    const Manifest m = load_manifest(a.manifest);
    const MorphableModel face = load_model(a.model);
    std::vector<std::string> unmatched;
    for (const auto& r : m.records) {
        if (!fs::exists(fs::path(a.pred_dir) / (r.id + ".paf"))) {
            unmatched.push_back(r.id);
        }
    }
    if (!unmatched.empty()) {
        std::string ids;
        for (const auto& id : unmatched) {
            ids += (ids.empty() ? "" : ",") + id;
        }
        throw DataError("eval: no prediction for ids " + ids);
    }
    MetricReport report;
    report.distance_units = face.units == "meters" ? "mm" : face.units;
    const fs::path csv_path = a.csv.empty() ? fs::path(a.out).replace_extension(".csv") : fs::path(a.csv);
    ensure_parent(csv_path);
    std::ofstream csv(csv_path);
    if (!csv) {
        throw DataError("cannot write " + csv_path.string());
    }
    csv << "id,language,lve,mve,dtw,mod\n";
    for (const auto& r : m.records) {
        const SampleData gt = load_sample(r, m.base_dir);
        const Matrix pred = read_matrix(fs::path(a.pred_dir) / (r.id + ".paf"), "expressions");
        if (pred.rows != gt.expressions.rows || pred.cols != gt.expressions.cols) {
            throw DataError("eval: prediction for " + r.id + " has the wrong shape");
        }
        const MeshSeq pm = expressions_to_meshes(face, gt.beta, ExpressionSeq{pred, kMotionFps});
        const MeshSeq gm = expressions_to_meshes(face, gt.beta, ExpressionSeq{gt.expressions, kMotionFps});
        const MetricValues v = evaluate_pair(pm, gm, face);
        report.add(r.language, v);
        csv << r.id << ',' << r.language << ',' << fmt(v.lve) << ',' << fmt(v.mve) << ',' << fmt(v.dtw) << ','
            << fmt(v.mod) << '\n';
    }
    json per_language = json::object();
    for (const auto& [lang, v] : report.per_language) {
        json entry = metrics_json(v);
        entry["samples"] = report.per_language_count.at(lang);
        per_language[lang] = entry;
    }
    const json j{{"samples", report.samples},
                 {"units", {{"lve", report.distance_units}, {"mve", report.distance_units},
                            {"mod", report.distance_units}, {"dtw", "normalized " + report.distance_units}}},
                 {"overall", metrics_json(report.overall)},
                 {"per_language", per_language}};
    ensure_parent(a.out);
    write_json_file(a.out, j);
    out << "lve " << fmt(report.overall.lve) << " mve " << fmt(report.overall.mve) << " dtw "
        << fmt(report.overall.dtw) << " mod " << fmt(report.overall.mod) << '\n';
}

struct MeshArgs {
    std::string expr, beta, model, format = "obj", out;
    bool clamp01 = false;
};

void cmd_export_mesh(const MeshArgs& a, std::ostream& out) {
    const MorphableModel face = load_model(a.model);
    Matrix frames = read_matrix(a.expr, "expressions");
    if (a.clamp01) {
        for (auto& v : frames.data) {
            v = std::clamp(v, 0.0F, 1.0F);
        }
    }
    const std::vector<float> beta = a.beta.empty() ? std::vector<float>(face.n_shape, 0.0F) : read_vector(a.beta, "beta");
    const MeshSeq mesh = expressions_to_meshes(face, beta, ExpressionSeq{frames, kMotionFps});
    if (a.format == "paf") {
        write_mesh_paf(a.out, mesh);
        out << "wrote " << mesh.length() << " frames to " << a.out << '\n';
        return;
    }
    fs::create_directories(a.out);
    for (std::size_t t = 0; t < mesh.length(); ++t) {
        char name[32];
        std::snprintf(name, sizeof(name), "frame_%05zu.obj", t);
        std::ofstream obj(fs::path(a.out) / name);
        if (!obj) {
            throw DataError("cannot write " + (fs::path(a.out) / name).string());
        }
        obj << std::setprecision(9);
        for (std::size_t v = 0; v < mesh.n_vertices; ++v) {
            const auto p = mesh.vertex(t, v);
            obj << "v " << p[0] << ' ' << p[1] << ' ' << p[2] << '\n';
        }
    }
    out << "wrote " << mesh.length() << " OBJ files to " << a.out << '\n';
}

struct EmbedArgs {
    std::string manifest, style, out;
};

void cmd_export_embeddings(const EmbedArgs& a, std::ostream& out, std::ostream& err) {
    const Manifest m = load_manifest(a.manifest);
    const StyleAutoencoder ae = load_style_checkpoint(a.style);
    ensure_parent(a.out);
    std::ofstream csv(a.out);
    if (!csv) {
        throw DataError("cannot write " + a.out);
    }
    std::size_t rows = 0;
    std::optional<std::size_t> text_width;
    for (const auto& r : m.records) {
        SampleData s;
        try {
            s = load_sample(r, m.base_dir);
        } catch (const DataError& e) {
            err << "polyglot: warning: skipping " << r.id << ": " << e.what() << '\n';
            continue;
        }
        const std::vector<float> emb = ae.encoder.embed(s.expressions);
        if (!text_width) {
            text_width = s.t_hat.size();
            csv << "id,speaker,language";
            for (std::size_t i = 0; i < emb.size(); ++i) {
                csv << ",s" << i;
            }
            for (std::size_t i = 0; i < *text_width; ++i) {
                csv << ",t" << i;
            }
            csv << '\n';
        }
        csv << r.id << ',' << r.speaker << ',' << r.language;
        csv << std::setprecision(9);
        for (float v : emb) {
            csv << ',' << v;
        }
        for (std::size_t i = 0; i < *text_width; ++i) {
            csv << ',' << (i < s.t_hat.size() ? s.t_hat[i] : 0.0F);
        }
        csv << '\n';
        ++rows;
    }
    out << "wrote " << rows << " embeddings to " << a.out << '\n';
}

void report_error(std::ostream& err, const char* kind, const std::string& message) {
    std::string line = message;
    std::replace(line.begin(), line.end(), '\n', ' ');
    err << "polyglot: error[" << kind << "]: " << line << '\n';
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Speech-driven 3DMM expression diffusion: data tools, training, sampling, evaluation"};
    app.name("polyglot");
    app.require_subcommand(1);
    app.set_config("--config", "", "TOML run-config file; command-line flags take precedence");

    FilterArgs filter;
    auto* s_filter = app.add_subcommand("filter-data", "Drop records with PESQ < 2 or RLE > 5 px");
    s_filter->add_option("--manifest", filter.manifest, "Input manifest")->required();
    s_filter->add_option("--out", filter.out, "Output manifest of kept records")->required();
    s_filter->add_option("--rejected", filter.rejected, "JSON list of rejected ids with reasons");

    SplitArgs split;
    auto* s_split = app.add_subcommand("split-data", "Per-language train/val/test split");
    s_split->add_option("--manifest", split.manifest, "Input manifest")->required();
    s_split->add_option("--out", split.out, "Output directory for train/val/test.json")->required();
    auto* split_seed = s_split->add_option("--seed", split.seed, "Shuffle seed");
    s_split->add_option("--train", split.spec.train, "Training records per language")->capture_default_str();
    s_split->add_option("--val", split.spec.val, "Validation records per language")->capture_default_str();
    s_split->add_option("--test", split.spec.test, "Test records per language")->capture_default_str();
    s_split->add_flag("--speaker-disjoint", split.spec.speaker_disjoint, "Keep each speaker inside one split");

    SynthArgs synth;
    auto* s_synth = app.add_subcommand("gen-synthetic", "Write a seeded synthetic corpus and face model");
    s_synth->add_option("--out", synth.out, "Output directory")->required();
    auto* synth_seed = s_synth->add_option("--seed", synth.spec.seed, "Generator seed");
    s_synth->add_option("--languages", synth.spec.languages, "Language count")->capture_default_str();
    s_synth->add_option("--speakers", synth.spec.speakers, "Speaker count")->capture_default_str();
    s_synth->add_option("--sentences", synth.spec.sentences, "Sentences per speaker and language")->capture_default_str();
    s_synth->add_option("--min-frames", synth.spec.min_frames, "Shortest sequence")->capture_default_str();
    s_synth->add_option("--max-frames", synth.spec.max_frames, "Longest sequence")->capture_default_str();
    s_synth->add_option("--d-audio", synth.spec.d_audio, "Audio feature width")->capture_default_str();
    s_synth->add_option("--d-text", synth.spec.d_text, "Transcript embedding width")->capture_default_str();
    s_synth->add_option("--model-seed", synth.model_seed, "Seed of the synthetic face model")->capture_default_str();

    StyleArgs style;
    style.model.width = 512;
    auto* s_style = app.add_subcommand("train-style", "Train the style autoencoder");
    s_style->add_option("--manifest", style.manifest, "Training manifest")->required();
    s_style->add_option("--out", style.out, "Output checkpoint (.paf + .json)")->required();
    auto* style_seed = s_style->add_option("--seed", style.train.seed, "Seed");
    s_style->add_option("--width", style.model.width, "Latent width h")->capture_default_str();
    s_style->add_option("--layers", style.model.layers, "Attention blocks")->capture_default_str();
    s_style->add_option("--heads", style.model.heads, "Attention heads")->capture_default_str();
    s_style->add_option("--epochs", style.train.epochs, "Epochs (ignored when --steps is set)")->capture_default_str();
    s_style->add_option("--steps", style.train.steps, "Optimizer steps")->capture_default_str();
    s_style->add_option("--batch", style.train.batch, "Windows per step")->capture_default_str();
    s_style->add_option("--window", style.train.window, "Window length")->capture_default_str();
    s_style->add_option("--lr", style.train.learning_rate, "Adam learning rate")->capture_default_str();
    s_style->add_option("--log", style.log, "Loss log CSV");

    TrainArgs train;
    auto* s_train = app.add_subcommand("train", "Train the diffusion model");
    auto& tc = train.config;
    s_train->add_option("--manifest", train.manifest, "Training manifest")->required();
    s_train->add_option("--model", train.model, "Morphable model (.paf + .json)")->required();
    s_train->add_option("--style", train.style, "Frozen style checkpoint");
    s_train->add_option("--out", train.out, "Output checkpoint (.paf + .json)")->required();
    s_train->add_option("--resume", train.resume, "Continue from a checkpoint");
    s_train->add_option("--log", train.log, "Loss log CSV");
    auto* train_seed = s_train->add_option("--seed", tc.seed, "Seed");
    s_train->add_option("--epochs", tc.epochs, "Epochs (ignored when --steps is set)")->capture_default_str();
    train.steps_opt = s_train->add_option("--steps", tc.steps, "Optimizer steps")->capture_default_str();
    s_train->add_option("--batch", tc.batch, "Windows per step")->capture_default_str();
    s_train->add_option("--lr", tc.learning_rate, "Adam learning rate")->capture_default_str();
    s_train->add_option("--diffusion-steps", tc.diffusion_steps, "N")->capture_default_str();
    s_train->add_option("--window", tc.window, "T_w")->capture_default_str();
    s_train->add_option("--context", tc.context, "T_p")->capture_default_str();
    s_train->add_option("--width", tc.width, "Hidden width h")->capture_default_str();
    s_train->add_option("--layers", tc.layers, "Decoder blocks")->capture_default_str();
    s_train->add_option("--heads", tc.heads, "Attention heads")->capture_default_str();
    s_train->add_option("--radius", tc.radius, "Alignment mask radius")->capture_default_str();
    s_train->add_flag("--causal-mask", tc.causal_mask, "Causal alignment mask");
    s_train->add_option("--p-drop-audio", tc.p_drop_audio, "Audio dropout probability")->capture_default_str();
    s_train->add_option("--p-drop-cond", tc.p_drop_cond, "Joint t_hat/S dropout probability")->capture_default_str();
    s_train->add_option("--grad-clip", tc.grad_clip, "Global gradient norm limit")->capture_default_str();
    s_train->add_option("--lambda-sim", tc.weights.simple, "Weight of L_simple")->capture_default_str();
    s_train->add_option("--lambda-mouth", tc.weights.mouth, "Mouth emphasis inside L_simple")->capture_default_str();
    s_train->add_option("--lambda-style", tc.weights.style, "Weight of L_style")->capture_default_str();
    s_train->add_option("--lambda-v", tc.weights.vertex, "Weight of L_v")->capture_default_str();
    s_train->add_option("--lambda-vel", tc.weights.velocity, "Weight of L_vel")->capture_default_str();
    s_train->add_option("--lambda-s", tc.weights.smooth, "Weight of L_smooth")->capture_default_str();
    s_train->add_flag("--no-style-S", tc.ablations.no_style_S, "Ablation: style embedding always null");
    s_train->add_flag("--no-text-t", tc.ablations.no_text_t, "Ablation: transcript embedding always null");
    s_train->add_flag("--no-style-loss", tc.ablations.no_style_loss, "Ablation: drop L_style");
    s_train->add_flag("--lookup-table-language", tc.ablations.lookup_table_language,
                      "Ablation: learned per-language table instead of t_hat");

    SampleArgs sample;
    auto* s_sample = app.add_subcommand("sample", "Generate expressions from audio features");
    s_sample->add_option("--checkpoint", sample.checkpoint, "Model checkpoint")->required();
    s_sample->add_option("--audio-feats", sample.audio, "PAF with audio_feats (T x d_a)");
    s_sample->add_option("--t-hat", sample.t_hat, "PAF with t_hat");
    s_sample->add_option("--beta", sample.beta, "PAF with beta");
    s_sample->add_option("--style-ref", sample.style_ref, "PAF with a reference expression sequence");
    s_sample->add_option("--language", sample.language, "Language tag (lookup-table checkpoints)");
    s_sample->add_option("--guidance", sample.guidance, "Guidance weights w_audio w_cond")
        ->expected(2)
        ->capture_default_str();
    s_sample->add_flag("--no-guidance", sample.no_guidance, "Fully conditioned estimate only, no guidance");
    s_sample->add_option("--manifest", sample.manifest, "Batch mode: sample every record");
    s_sample->add_option("--out", sample.out, "Output PAF (directory in batch mode)")->required();
    s_sample->add_option("--model", sample.model, "Morphable model for --mesh-out");
    s_sample->add_option("--mesh-out", sample.mesh_out, "Also write the vertex sequence as PAF");
    auto* sample_seed = s_sample->add_option("--seed", sample.seed, "Noise seed");

    EvalArgs eval;
    auto* s_eval = app.add_subcommand("eval", "LVE, MVE, DTW and MOD against ground truth");
    s_eval->add_option("--pred-dir", eval.pred_dir, "Directory of <id>.paf predictions")->required();
    s_eval->add_option("--gt-manifest", eval.manifest, "Ground-truth manifest")->required();
    s_eval->add_option("--model", eval.model, "Morphable model")->required();
    s_eval->add_option("--out", eval.out, "Report JSON")->required();
    s_eval->add_option("--csv", eval.csv, "Per-sample CSV (default: report path with .csv)");

    MeshArgs mesh;
    auto* s_mesh = app.add_subcommand("export-mesh", "Turn expressions into vertex sequences");
    s_mesh->add_option("--expr", mesh.expr, "PAF with expressions")->required();
    s_mesh->add_option("--beta", mesh.beta, "PAF with beta (default zero)");
    s_mesh->add_option("--model", mesh.model, "Morphable model")->required();
    s_mesh->add_option("--format", mesh.format, "obj or paf")->check(CLI::IsMember({"obj", "paf"}))->capture_default_str();
    s_mesh->add_flag("--clamp01", mesh.clamp01, "Clamp coefficients to [0, 1] first");
    s_mesh->add_option("--out", mesh.out, "Output directory (obj) or file (paf)")->required();

    EmbedArgs embed;
    auto* s_embed = app.add_subcommand("export-embeddings", "Write style embeddings and t_hat as CSV");
    s_embed->add_option("--manifest", embed.manifest, "Manifest")->required();
    s_embed->add_option("--style-checkpoint", embed.style, "Style checkpoint")->required();
    s_embed->add_option("--out", embed.out, "Output CSV")->required();

    for (auto* sub : app.get_subcommands({})) {
        sub->fallthrough();
    }

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == static_cast<int>(CLI::ExitCodes::Success)) {
            app.exit(e, out, err);
            return kOk;
        }
        report_error(err, "usage", e.what());
        return kUsage;
    }

    try {
        if (s_filter->parsed()) {
            cmd_filter(filter, out);
        } else if (s_split->parsed()) {
            require_seed(split_seed);
            cmd_split(split, out, err);
        } else if (s_synth->parsed()) {
            require_seed(synth_seed);
            cmd_gen_synthetic(synth, out);
        } else if (s_style->parsed()) {
            require_seed(style_seed);
            cmd_train_style(style, out);
        } else if (s_train->parsed()) {
            require_seed(train_seed);
            cmd_train(train, out, err);
        } else if (s_sample->parsed()) {
            require_seed(sample_seed);
            cmd_sample(sample, out);
        } else if (s_eval->parsed()) {
            cmd_eval(eval, out);
        } else if (s_mesh->parsed()) {
            cmd_export_mesh(mesh, out);
        } else if (s_embed->parsed()) {
            cmd_export_embeddings(embed, out, err);
        }
    } catch (const UsageError& e) {
        report_error(err, "usage", e.what());
        return kUsage;
    } catch (const NumericError& e) {
        report_error(err, "numeric", e.what());
        return kNumericError;
    } catch (const DataError& e) {
        report_error(err, "data", e.what());
        return kDataError;
    } catch (const ShapeError& e) {
        report_error(err, "data", e.what());
        return kDataError;
    } catch (const fs::filesystem_error& e) {
        report_error(err, "data", e.what());
        return kDataError;
    } catch (const std::exception& e) {
        report_error(err, "internal", e.what());
        return kInternal;
    }
    return kOk;
}

}  // namespace polyglot::cli
