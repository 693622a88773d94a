#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "polyglot/dataset.hpp"
#include "polyglot/morphable.hpp"

// Seeded stand-in for a fitted multilingual corpus. Expressions are a fixed
// function of planted audio latents, modulated per speaker and language.
namespace polyglot {

struct SyntheticSetSpec {
    std::size_t languages = 3;
    std::size_t speakers = 3;
    std::size_t sentences = 4;  // per speaker and language
    std::size_t min_frames = 48;
    std::size_t max_frames = 80;
    std::size_t d_audio = 16;
    std::size_t d_text = 8;
    std::size_t n_components = 4;
    std::uint64_t seed = 0;
};

struct SyntheticSample {
    SampleData data;
    std::size_t speaker_index = 0;
    std::size_t language_index = 0;
};

std::string synthetic_language_name(std::size_t index);

std::vector<SyntheticSample> generate_polyset(const SyntheticSetSpec& spec, const MorphableModel& model);

/// Writes `<dir>/data/<id>.paf` per sample and `<dir>/manifest.json`.
void write_polyset(const std::filesystem::path& dir, const std::vector<SyntheticSample>& samples);

}  // namespace polyglot
