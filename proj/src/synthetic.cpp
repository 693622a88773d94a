#include "polyglot/synthetic.hpp"

#include <cmath>
#include <numbers>

#include "polyglot/conditioning.hpp"
#include "polyglot/errors.hpp"
#include "polyglot/numerics/rng.hpp"
#include "polyglot/paf.hpp"

namespace polyglot {

namespace {

constexpr const char* kLanguageNames[] = {"en", "es", "zh", "de", "fr", "ja", "ko", "ru", "ar", "hi",
                                          "pt", "it", "nl", "tr", "pl", "sv", "vi", "th", "id", "el"};

std::vector<double> normal_vector(std::size_t n, double scale, Rng& rng) {
    std::vector<double> v(n);
    for (auto& x : v) {
        x = scale * rng.normal();
    }
    return v;
}

struct SpeakerStyle {
    double gain = 1.0;
    std::vector<double> offset;
    std::vector<double> motif;     // weight of the z0*z1 product per parameter
    std::vector<double> nod_dir;   // non-mouth oscillation direction
    double nod_amplitude = 0.0;
    double nod_frequency = 0.0;
    std::vector<float> beta;
};

}  // namespace

std::string synthetic_language_name(std::size_t index) {
    constexpr std::size_t known = sizeof(kLanguageNames) / sizeof(kLanguageNames[0]);
    return index < known ? kLanguageNames[index] : "lang" + std::to_string(index);
}

std::vector<SyntheticSample> generate_polyset(const SyntheticSetSpec& spec, const MorphableModel& model) {
    if (spec.languages == 0 || spec.speakers == 0 || spec.sentences == 0 || spec.min_frames == 0 ||
        spec.max_frames < spec.min_frames || spec.n_components < 2) {
        throw DataError("generate_polyset: invalid generator spec");
    }
    const std::size_t k = model.n_expr;
    const std::size_t L = spec.n_components;
    std::vector<bool> is_mouth(k, false);
    for (std::size_t id : model.mouth_param_ids) {
        is_mouth[id] = true;
    }

    Rng world(spec.seed, 0x9015E7);
    // Shared audio-to-expression map; mouth parameters respond most strongly.
    std::vector<double> G(k * L);
    std::vector<double> H(k * L);
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < L; ++j) {
            G[i * L + j] = (is_mouth[i] ? 1.0 : 0.25) * world.normal();
            H[i * L + j] = 0.8 * world.normal();
        }
    }
    std::vector<std::vector<double>> language_offset;
    for (std::size_t l = 0; l < spec.languages; ++l) {
        language_offset.push_back(normal_vector(k, 0.2, world));
    }
    std::vector<SpeakerStyle> speakers(spec.speakers);
    for (std::size_t s = 0; s < spec.speakers; ++s) {
        auto& sp = speakers[s];
        sp.gain = 0.6 + 0.8 * static_cast<double>(s) / static_cast<double>(std::max<std::size_t>(1, spec.speakers - 1));
        sp.offset = normal_vector(k, 0.5, world);
        sp.motif = normal_vector(k, 0.3, world);
        sp.nod_dir = normal_vector(k, 1.0, world);
        for (std::size_t i = 0; i < k; ++i) {
            if (is_mouth[i]) {
                sp.nod_dir[i] = 0.0;
            }
        }
        sp.nod_amplitude = 0.05 + 0.1 * world.uniform();
        sp.nod_frequency = 0.01 + 0.03 * world.uniform();
        const auto beta = normal_vector(model.n_shape, 1.0, world);
        sp.beta.assign(beta.begin(), beta.end());
    }

    std::vector<SyntheticSample> out;
    std::size_t counter = 0;
    for (std::size_t l = 0; l < spec.languages; ++l) {
        for (std::size_t s = 0; s < spec.speakers; ++s) {
            for (std::size_t n = 0; n < spec.sentences; ++n, ++counter) {
                Rng rng = Rng(spec.seed, 0x5A3F).fork(counter);
                const auto frames = static_cast<std::size_t>(rng.uniform_int(
                    static_cast<std::int64_t>(spec.min_frames), static_cast<std::int64_t>(spec.max_frames)));
                SyntheticAudioSpec audio_spec;
                audio_spec.seed = rng.next_u64();
                audio_spec.d_audio = spec.d_audio;
                audio_spec.d_text = spec.d_text;
                audio_spec.n_components = L;
                audio_spec.language = l;
                audio_spec.world_seed = spec.seed;
                const SyntheticFeatures feats = synthetic_features(audio_spec, frames);

                const auto& sp = speakers[s];
                const double nod_phase = 2.0 * std::numbers::pi * rng.uniform();
                Matrix expr(frames, k);
                for (std::size_t t = 0; t < frames; ++t) {
                    const auto z = feats.latent.row(t);
                    const double nod = sp.nod_amplitude *
                                       std::sin(2.0 * std::numbers::pi * sp.nod_frequency * static_cast<double>(t) + nod_phase);
                    for (std::size_t i = 0; i < k; ++i) {
                        double lin = 0.0;
                        double nonlin = 0.0;
                        for (std::size_t j = 0; j < L; ++j) {
                            lin += G[i * L + j] * z[j];
                            nonlin += H[i * L + j] * z[j];
                        }
                        const double v = sp.gain * lin + 0.3 * std::tanh(nonlin) + sp.motif[i] * z[0] * z[1] +
                                         sp.offset[i] + language_offset[l][i] + nod * sp.nod_dir[i];
                        expr(t, i) = static_cast<float>(v);
                    }
                }

                SyntheticSample sample;
                sample.speaker_index = s;
                sample.language_index = l;
                auto& rec = sample.data.record;
                rec.language = synthetic_language_name(l);
                rec.speaker = "spk" + std::to_string(s);
                rec.id = rec.language + "_" + rec.speaker + "_" + std::to_string(n);
                rec.fps = kMotionFps;
                rec.n_frames = frames;
                const std::string file = "data/" + rec.id + ".paf";
                rec.expressions_path = rec.audio_path = rec.t_hat_path = rec.beta_path = file;
                rec.pesq = 2.5 + 2.0 * rng.uniform();
                rec.rle = 0.5 + 3.5 * rng.uniform();
                rec.transcript = "synthetic sentence " + std::to_string(n) + " (" + rec.language + ")";
                sample.data.expressions = std::move(expr);
                sample.data.audio = feats.audio;
                sample.data.t_hat = feats.t_hat;
                sample.data.beta = sp.beta;
                out.push_back(std::move(sample));
            }
        }
    }
    return out;
}

void write_polyset(const std::filesystem::path& dir, const std::vector<SyntheticSample>& samples) {
    std::filesystem::create_directories(dir / "data");
    std::vector<SampleRecord> records;
    for (const auto& s : samples) {
        PafFile f;
        f.set("expressions", PafArray::from_matrix(s.data.expressions));
        f.set("audio_feats", PafArray::from_matrix(s.data.audio));
        f.set("t_hat", PafArray::from_vector(s.data.t_hat));
        f.set("beta", PafArray::from_vector(s.data.beta));
        f.set("fps", PafArray::from_vector(std::vector<float>{static_cast<float>(s.data.record.fps)}));
        f.write(dir / s.data.record.expressions_path);
        records.push_back(s.data.record);
    }
    save_manifest(dir / "manifest.json", records, dir);
}

}  // namespace polyglot
