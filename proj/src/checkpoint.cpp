#include "polyglot/checkpoint.hpp"

#include <algorithm>
#include <fstream>

#include "polyglot/errors.hpp"
#include "polyglot/morphable.hpp"

namespace polyglot {

namespace fs = std::filesystem;
using nlohmann::json;

void add_params(PafFile& file, const nn::ParamList& params, const std::string& prefix) {
    for (const auto& p : params) {
        PafArray a;
        for (std::size_t d : p.tensor.shape()) {
            a.dims.push_back(static_cast<std::uint32_t>(d));
        }
        a.values.assign(p.tensor.values().begin(), p.tensor.values().end());
        file.set(prefix + p.name, std::move(a));
    }
}

void load_params(const PafFile& file, const nn::ParamList& params, const std::string& prefix) {
    for (auto p : params) {
        const std::string name = prefix + p.name;
        if (!file.contains(name)) {
            throw DataError("checkpoint: missing array " + name);
        }
        const PafArray& a = file.get(name);
        const auto& shape = p.tensor.shape();
        const bool same = a.dims.size() == shape.size() &&
                          std::equal(shape.begin(), shape.end(), a.dims.begin(),
                                     [](std::size_t s, std::uint32_t d) { return s == d; });
        if (!same) {
            throw DataError("checkpoint: shape mismatch for " + name);
        }
        auto dst = p.tensor.mutable_values();
        std::transform(a.values.begin(), a.values.end(), dst.begin(), [](float v) { return static_cast<nn::Real>(v); });
    }
}

json read_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open " + path.string());
    }
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

void write_json_file(const fs::path& path, const json& value) {
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot write " + path.string());
    }
    out << value.dump(2) << '\n';
}

void check_checkpoint_header(const json& meta, const std::string& kind) {
    if (meta.value("kind", std::string{}) != kind) {
        throw DataError("checkpoint: expected kind '" + kind + "'");
    }
    const int version = meta.value("version", -1);
    if (version != kCheckpointVersion) {
        throw VersionError("checkpoint: unsupported version " + std::to_string(version) + " (expected " +
                           std::to_string(kCheckpointVersion) + ")");
    }
}

void to_json(json& j, const StyleConfig& c) {
    j = json{{"k", c.n_expr}, {"h", c.width}, {"layers", c.layers}, {"heads", c.heads}};
}

void from_json(const json& j, StyleConfig& c) {
    c.n_expr = j.at("k").get<std::size_t>();
    c.width = j.at("h").get<std::size_t>();
    c.layers = j.at("layers").get<std::size_t>();
    c.heads = j.at("heads").get<std::size_t>();
}

void save_style_checkpoint(const fs::path& path, const StyleAutoencoder& model) {
    PafFile file;
    add_params(file, model.params());
    file.write(path);
    write_json_file(sidecar_path(path), json{{"kind", "style"}, {"version", kCheckpointVersion}, {"config", model.config}});
}

StyleAutoencoder load_style_checkpoint(const fs::path& path) {
    const json meta = read_json_file(sidecar_path(path));
    check_checkpoint_header(meta, "style");
    StyleAutoencoder model;
    try {
        model = StyleAutoencoder::create(meta.at("config").get<StyleConfig>(), 0);
    } catch (const json::exception& e) {
        throw DataError(std::string("style checkpoint config: ") + e.what());
    }
    load_params(PafFile::read(path), model.params());
    return model;
}

}  // namespace polyglot
