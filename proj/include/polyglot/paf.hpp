#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "polyglot/matrix.hpp"

namespace polyglot {

/// One named float32 array of a PAF container.
struct PafArray {
    std::vector<std::uint32_t> dims;
    std::vector<float> values;

    static PafArray from_matrix(const Matrix& m);
    static PafArray from_vector(std::span<const float> v);
    /// Rank-2 view; a rank-1 array becomes a single row.
    [[nodiscard]] Matrix to_matrix() const;
    [[nodiscard]] std::size_t element_count() const;

    friend bool operator==(const PafArray&, const PafArray&) = default;
};

/*
 * PAF container, all integers unsigned 32-bit little-endian:
 *
 *   "PAF1" | entry_count
 *   per entry: name_len | name bytes (UTF-8) | dtype (1 = float32) | rank |
 *              dims[rank] | payload (row-major float32 LE)
 *
 * Entry names are unique; entries keep insertion order on disk.
 */
class PafFile {
public:
    static constexpr std::uint32_t kDtypeFloat32 = 1;

    /// Adds an entry, or replaces the entry with the same name in place.
    void set(const std::string& name, PafArray array);
    [[nodiscard]] bool contains(const std::string& name) const;
    /// Throws DataError when the entry is missing.
    [[nodiscard]] const PafArray& get(const std::string& name) const;
    [[nodiscard]] const std::vector<std::pair<std::string, PafArray>>& entries() const noexcept { return entries_; }

    [[nodiscard]] std::vector<std::uint8_t> encode() const;
    /// Validates magic, dtype, and sizes; throws PafError with the byte offset.
    static PafFile decode(std::span<const std::uint8_t> bytes);

    void write(const std::filesystem::path& path) const;
    static PafFile read(const std::filesystem::path& path);

    friend bool operator==(const PafFile&, const PafFile&) = default;

private:
    std::vector<std::pair<std::string, PafArray>> entries_;
};

inline PafFile paf_read(const std::filesystem::path& path) { return PafFile::read(path); }
inline void paf_write(const std::filesystem::path& path, const PafFile& file) { file.write(path); }

/// Reads a whole file; throws DataError if it cannot be opened.
std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace polyglot
