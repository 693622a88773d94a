#include "polyglot/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "polyglot/errors.hpp"
#include "polyglot/numerics/rng.hpp"
#include "polyglot/paf.hpp"

namespace polyglot {

namespace fs = std::filesystem;
using nlohmann::json;

void to_json(json& j, const SampleRecord& r) {
    j = json{{"id", r.id},
             {"language", r.language},
             {"speaker", r.speaker},
             {"fps", r.fps},
             {"n_frames", r.n_frames},
             {"expressions", r.expressions_path},
             {"audio_feats", r.audio_path},
             {"t_hat", r.t_hat_path},
             {"beta", r.beta_path}};
    if (r.pesq) {
        j["pesq"] = *r.pesq;
    }
    if (r.rle) {
        j["rle"] = *r.rle;
    }
    if (r.transcript) {
        j["transcript"] = *r.transcript;
    }
}

void from_json(const json& j, SampleRecord& r) {
    try {
        r.id = j.at("id").get<std::string>();
        r.language = j.at("language").get<std::string>();
        r.speaker = j.value("speaker", std::string{});
        r.fps = j.value("fps", 25.0);
        r.n_frames = j.at("n_frames").get<std::size_t>();
        r.expressions_path = j.value("expressions", std::string{});
        r.audio_path = j.value("audio_feats", std::string{});
        r.t_hat_path = j.value("t_hat", std::string{});
        r.beta_path = j.value("beta", std::string{});
        r.pesq = j.contains("pesq") && !j["pesq"].is_null() ? std::optional(j["pesq"].get<double>()) : std::nullopt;
        r.rle = j.contains("rle") && !j["rle"].is_null() ? std::optional(j["rle"].get<double>()) : std::nullopt;
        r.transcript = j.contains("transcript") ? std::optional(j["transcript"].get<std::string>()) : std::nullopt;
    } catch (const json::exception& e) {
        throw DataError(std::string("manifest record: ") + e.what());
    }
}

Manifest load_manifest(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open manifest " + path.string());
    }
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw DataError("manifest " + path.string() + ": " + e.what());
    }
    if (!j.is_array()) {
        throw DataError("manifest " + path.string() + ": expected a JSON array");
    }
    Manifest m;
    m.base_dir = path.parent_path();
    m.records = j.get<std::vector<SampleRecord>>();
    std::set<std::string> ids;
    for (const auto& r : m.records) {
        if (!ids.insert(r.id).second) {
            throw DataError("manifest: duplicate id " + r.id);
        }
    }
    return m;
}

void save_manifest(const fs::path& path, const std::vector<SampleRecord>& records, const fs::path& records_base_dir) {
    const fs::path target_dir = path.parent_path().empty() ? fs::path(".") : path.parent_path();
    fs::create_directories(target_dir);
    const auto rebase = [&](const std::string& p) -> std::string {
        if (p.empty()) {
            return p;
        }
        const fs::path abs = fs::weakly_canonical(fs::absolute(records_base_dir / p));
        return fs::relative(abs, fs::weakly_canonical(fs::absolute(target_dir))).generic_string();
    };
    json arr = json::array();
    for (auto r : records) {
        r.expressions_path = rebase(r.expressions_path);
        r.audio_path = rebase(r.audio_path);
        r.t_hat_path = rebase(r.t_hat_path);
        r.beta_path = rebase(r.beta_path);
        arr.push_back(r);
    }
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot write manifest " + path.string());
    }
    out << arr.dump(2) << '\n';
}

FilterResult filter_manifest(const std::vector<SampleRecord>& records) {
    FilterResult out;
    for (const auto& r : records) {
        if (!r.pesq || !r.rle) {
            out.rejected.push_back({r, "missing-score"});
        } else if (!(*r.pesq >= kMinPesq)) {
            out.rejected.push_back({r, "pesq"});
        } else if (!(*r.rle <= kMaxRle)) {
            out.rejected.push_back({r, "rle"});
        } else {
            out.kept.push_back(r);
        }
    }
    return out;
}

namespace {

std::uint64_t language_stream(const std::string& language) {
    // FNV-1a, so each language's shuffle is independent of the others.
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : language) {
        h = (h ^ c) * 1099511628211ULL;
    }
    return h;
}

}  // namespace

SplitResult split_by_language(const std::vector<SampleRecord>& records, const SplitSpec& spec, std::uint64_t seed) {
    std::map<std::string, std::vector<SampleRecord>> by_language;
    for (const auto& r : records) {
        if (r.language.empty()) {
            throw DataError("split: record " + r.id + " has an empty language tag");
        }
        by_language[r.language].push_back(r);
    }
    SplitResult out;
    const std::size_t wanted = spec.train + spec.val + spec.test;
    for (auto& [language, bucket] : by_language) {
        std::sort(bucket.begin(), bucket.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
        Rng rng(seed, language_stream(language));
        std::size_t n_train = spec.train;
        std::size_t n_val = spec.val;
        std::size_t n_test = spec.test;
        if (bucket.size() < wanted) {
            const double f = static_cast<double>(bucket.size()) / static_cast<double>(wanted);
            n_val = static_cast<std::size_t>(std::floor(f * static_cast<double>(spec.val)));
            n_test = static_cast<std::size_t>(std::floor(f * static_cast<double>(spec.test)));
            n_train = bucket.size() - n_val - n_test;
            out.warnings.push_back("language " + language + ": " + std::to_string(bucket.size()) +
                                   " records, counts scaled to " + std::to_string(n_train) + "/" +
                                   std::to_string(n_val) + "/" + std::to_string(n_test));
        }
        if (!spec.speaker_disjoint) {
            rng.shuffle(bucket);
            std::size_t i = 0;
            for (; i < n_train; ++i) {
                out.train.push_back(bucket[i]);
            }
            for (; i < n_train + n_val; ++i) {
                out.val.push_back(bucket[i]);
            }
            for (; i < n_train + n_val + n_test; ++i) {
                out.test.push_back(bucket[i]);
            }
            continue;
        }
        // Whole speakers go to one split; targets are filled in order.
        std::map<std::string, std::vector<SampleRecord>> by_speaker;
        for (const auto& r : bucket) {
            by_speaker[r.speaker].push_back(r);
        }
        std::vector<std::string> speakers;
        for (const auto& [s, _] : by_speaker) {
            speakers.push_back(s);
        }
        rng.shuffle(speakers);
        std::vector<SampleRecord>* targets[3] = {&out.train, &out.val, &out.test};
        const std::size_t quota[3] = {n_train, n_val, n_test};
        std::size_t filled[3] = {0, 0, 0};
        std::size_t slot = 0;
        for (const auto& s : speakers) {
            while (slot < 3 && filled[slot] >= quota[slot]) {
                ++slot;
            }
            if (slot == 3) {
                break;
            }
            for (const auto& r : by_speaker[s]) {
                targets[slot]->push_back(r);
            }
            filled[slot] += by_speaker[s].size();
        }
        if (filled[0] != n_train || filled[1] != n_val || filled[2] != n_test) {
            out.warnings.push_back("language " + language + ": speaker-disjoint split gave " +
                                   std::to_string(filled[0]) + "/" + std::to_string(filled[1]) + "/" +
                                   std::to_string(filled[2]));
        }
    }
    return out;
}

namespace {

const PafArray& entry(const PafFile& file, const std::string& name, const fs::path& path) {
    if (file.contains(name)) {
        return file.get(name);
    }
    if (file.entries().size() == 1) {
        return file.entries().front().second;
    }
    throw DataError(path.string() + ": missing array '" + name + "'");
}

}  // namespace

SampleData load_sample(const SampleRecord& record, const fs::path& base_dir) {
    if (std::abs(record.fps - 25.0) > 1e-9) {
        throw DataError("sample " + record.id + ": fps must be 25");
    }
    std::map<std::string, PafFile> cache;
    const auto open = [&](const std::string& rel) -> const PafFile& {
        if (rel.empty()) {
            throw DataError("sample " + record.id + ": missing array path");
        }
        auto it = cache.find(rel);
        if (it == cache.end()) {
            it = cache.emplace(rel, PafFile::read(base_dir / rel)).first;
        }
        return it->second;
    };
    SampleData s;
    s.record = record;
    s.expressions = entry(open(record.expressions_path), "expressions", record.expressions_path).to_matrix();
    s.audio = entry(open(record.audio_path), "audio_feats", record.audio_path).to_matrix();
    s.t_hat = entry(open(record.t_hat_path), "t_hat", record.t_hat_path).values;
    s.beta = entry(open(record.beta_path), "beta", record.beta_path).values;
    if (s.expressions.rows != record.n_frames || s.audio.rows != record.n_frames) {
        throw DataError("sample " + record.id + ": frame count disagrees with n_frames");
    }
    return s;
}

std::vector<SampleData> load_samples(const Manifest& manifest) {
    std::vector<SampleData> out;
    out.reserve(manifest.records.size());
    for (const auto& r : manifest.records) {
        out.push_back(load_sample(r, manifest.base_dir));
    }
    return out;
}

std::vector<std::size_t> window_starts(std::size_t frames, std::size_t window, std::size_t context,
                                       std::size_t offset) {
    if (window == 0 || context >= window) {
        throw ShapeError("window_starts: need 0 <= T_p < T_w");
    }
    if (frames <= window) {
        return {0};
    }
    const std::size_t last = frames - window;
    const std::size_t stride = window - context;
    std::vector<std::size_t> starts{0};
    for (std::size_t s = offset; s < last; s += stride) {
        if (s > 0) {
            starts.push_back(s);
        }
    }
    starts.push_back(last);
    return starts;
}

TrainingWindow make_window(const SampleData& sample, std::size_t sample_index, std::size_t start, std::size_t window,
                           std::size_t context) {
    const std::size_t T = sample.expressions.rows;
    if (T == 0 || start >= T) {
        throw ShapeError("make_window: start outside the sequence");
    }
    const auto rows = [&](const Matrix& m, std::ptrdiff_t from, std::size_t count) {
        Matrix out(count, m.cols);
        for (std::size_t r = 0; r < count; ++r) {
            const std::ptrdiff_t src = std::clamp<std::ptrdiff_t>(from + static_cast<std::ptrdiff_t>(r), 0,
                                                                  static_cast<std::ptrdiff_t>(T) - 1);
            const auto row = m.row(static_cast<std::size_t>(src));
            std::copy(row.begin(), row.end(), out.row(r).begin());
        }
        return out;
    };
    TrainingWindow w;
    w.sample = sample_index;
    w.start = start;
    const auto s = static_cast<std::ptrdiff_t>(start);
    const auto c = static_cast<std::ptrdiff_t>(context);
    w.prev_expressions = rows(sample.expressions, s - c, context);
    w.expressions = rows(sample.expressions, s, window);
    w.prev_audio = rows(sample.audio, s - c, context);
    w.audio = rows(sample.audio, s, window);
    w.is_start = start == 0;
    w.padded = start + window > T;
    return w;
}

WindowSampler::WindowSampler(std::vector<std::size_t> lengths, std::size_t window, std::size_t context,
                             std::size_t batch, std::uint64_t seed)
    : lengths_(std::move(lengths)), window_(window), context_(context), batch_(std::max<std::size_t>(1, batch)),
      seed_(seed) {
    if (lengths_.empty()) {
        throw DataError("WindowSampler: no sequences");
    }
}

std::vector<WindowRef> WindowSampler::epoch(std::size_t e) const {
    Rng rng = Rng(seed_, 0xE90C).fork(e);
    std::vector<WindowRef> refs;
    const std::size_t stride = window_ - context_;
    for (std::size_t i = 0; i < lengths_.size(); ++i) {
        const auto offset = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(stride) - 1));
        for (std::size_t s : window_starts(lengths_[i], window_, context_, offset)) {
            refs.push_back({i, s});
        }
    }
    rng.shuffle(refs);
    return refs;
}

std::vector<WindowRef> WindowSampler::batch(std::size_t step) {
    const std::size_t first = step * batch_;
    std::vector<WindowRef> out;
    out.reserve(batch_);
    std::size_t e = 0;
    for (std::size_t idx = first; idx < first + batch_; ++idx) {
        while (true) {
            if (e == epochs_.size()) {
                epoch_begin_.push_back(e == 0 ? 0 : epoch_begin_.back() + epochs_.back().size());
                epochs_.push_back(epoch(e));
            }
            if (idx < epoch_begin_[e] + epochs_[e].size()) {
                break;
            }
            ++e;
        }
        out.push_back(epochs_[e][idx - epoch_begin_[e]]);
    }
    return out;
}

}  // namespace polyglot
