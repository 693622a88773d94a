#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "polyglot/layers.hpp"
#include "polyglot/paf.hpp"
#include "polyglot/style.hpp"

namespace polyglot {

inline constexpr int kCheckpointVersion = 1;

/// Thrown when a checkpoint was written by an incompatible format version.
class VersionError : public DataError {
public:
    using DataError::DataError;
};

void add_params(PafFile& file, const nn::ParamList& params, const std::string& prefix = "");
/// Copies arrays named `prefix + name` into the tensors; shapes must match.
void load_params(const PafFile& file, const nn::ParamList& params, const std::string& prefix = "");

nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const nlohmann::json& value);

/// Throws VersionError unless `meta` carries the expected kind and version.
void check_checkpoint_header(const nlohmann::json& meta, const std::string& kind);

void to_json(nlohmann::json& j, const StyleConfig& c);
void from_json(const nlohmann::json& j, StyleConfig& c);

/// `<path>` holds the arrays, the sibling `.json` the config.
void save_style_checkpoint(const std::filesystem::path& path, const StyleAutoencoder& model);
StyleAutoencoder load_style_checkpoint(const std::filesystem::path& path);

}  // namespace polyglot
