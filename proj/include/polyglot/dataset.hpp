#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "polyglot/matrix.hpp"

namespace polyglot {

/// One manifest entry. Paths are relative to the manifest file and may all
/// name the same PAF container.
struct SampleRecord {
    std::string id;
    std::string language;
    std::string speaker;
    double fps = 25.0;
    std::size_t n_frames = 0;
    std::string expressions_path;
    std::string audio_path;
    std::string t_hat_path;
    std::string beta_path;
    std::optional<double> pesq;
    std::optional<double> rle;
    std::optional<std::string> transcript;
};

void to_json(nlohmann::json& j, const SampleRecord& r);
void from_json(const nlohmann::json& j, SampleRecord& r);

struct Manifest {
    std::vector<SampleRecord> records;
    std::filesystem::path base_dir;
};

Manifest load_manifest(const std::filesystem::path& path);
/// Writes a JSON array; record paths are rewritten relative to the new location.
void save_manifest(const std::filesystem::path& path, const std::vector<SampleRecord>& records,
                   const std::filesystem::path& records_base_dir);

inline constexpr double kMinPesq = 2.0;
inline constexpr double kMaxRle = 5.0;

struct Rejection {
    SampleRecord record;
    std::string reason;  // "pesq", "rle" or "missing-score"
};

struct FilterResult {
    std::vector<SampleRecord> kept;
    std::vector<Rejection> rejected;
};

/// Keeps pesq >= 2 and rle <= 5 (both boundaries kept).
FilterResult filter_manifest(const std::vector<SampleRecord>& records);

struct SplitSpec {
    std::size_t train = 450;
    std::size_t val = 50;
    std::size_t test = 50;
    bool speaker_disjoint = false;
};

struct SplitResult {
    std::vector<SampleRecord> train;
    std::vector<SampleRecord> val;
    std::vector<SampleRecord> test;
    std::vector<std::string> warnings;
};

/// Per language: sort by id, shuffle with the seed, take the counts. Short
/// languages are scaled down proportionally with a warning.
SplitResult split_by_language(const std::vector<SampleRecord>& records, const SplitSpec& spec, std::uint64_t seed);

/// Arrays of one sample, loaded through the PAF codec.
struct SampleData {
    SampleRecord record;
    Matrix expressions;  // T x k
    Matrix audio;        // T x d_a
    std::vector<float> t_hat;
    std::vector<float> beta;
};

SampleData load_sample(const SampleRecord& record, const std::filesystem::path& base_dir);
std::vector<SampleData> load_samples(const Manifest& manifest);

struct WindowRef {
    std::size_t sample = 0;
    std::size_t start = 0;
};

/// Window starts for one sequence: stride T_w - T_p from `offset`, plus 0 and
/// T - T_w so both ends are always covered. A sequence shorter than T_w has
/// the single start 0.
std::vector<std::size_t> window_starts(std::size_t frames, std::size_t window, std::size_t context,
                                       std::size_t offset);

struct TrainingWindow {
    std::size_t sample = 0;
    std::size_t start = 0;
    Matrix prev_expressions;  // T_p x k
    Matrix expressions;       // T_w x k
    Matrix prev_audio;        // T_p x d_a
    Matrix audio;             // T_w x d_a
    bool is_start = false;    // use the learned start features as context
    bool padded = false;      // sequence shorter than T_w, edge-padded
};

/// Context frames before 0 repeat frame 0; frames past the end repeat the last.
TrainingWindow make_window(const SampleData& sample, std::size_t sample_index, std::size_t start, std::size_t window,
                           std::size_t context);

/// Deterministic epoch stream of shuffled windows. Epoch e draws its offsets
/// and order from the seed and e alone, so any step can be reproduced.
class WindowSampler {
public:
    WindowSampler(std::vector<std::size_t> lengths, std::size_t window, std::size_t context, std::size_t batch,
                  std::uint64_t seed);

    [[nodiscard]] std::vector<WindowRef> batch(std::size_t step);
    [[nodiscard]] std::vector<WindowRef> epoch(std::size_t e) const;

private:
    std::vector<std::size_t> lengths_;
    std::size_t window_;
    std::size_t context_;
    std::size_t batch_;
    std::uint64_t seed_;
    std::vector<std::vector<WindowRef>> epochs_;
    std::vector<std::size_t> epoch_begin_;  // cumulative window index of each cached epoch
};

}  // namespace polyglot
