#include "polyglot/paf.hpp"

#include <algorithm>
#include <bit>
#include <fstream>
#include <numeric>
#include <unordered_set>

namespace polyglot {

namespace {

constexpr std::uint8_t kMagic[4] = {'P', 'A', 'F', '1'};
constexpr std::uint32_t kMaxRank = 8;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) {
        out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
}

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::uint32_t u32(const char* what) {
        need(4, what);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
        }
        pos_ += 4;
        return v;
    }

    std::span<const std::uint8_t> take(std::size_t n, const char* what) {
        need(n, what);
        auto out = bytes_.subspan(pos_, n);
        pos_ += n;
        return out;
    }

    [[nodiscard]] std::size_t pos() const noexcept { return pos_; }
    [[nodiscard]] std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

private:
    void need(std::size_t n, const char* what) const {
        if (bytes_.size() - pos_ < n) {
            throw PafError(std::string("PAF truncated while reading ") + what, pos_);
        }
    }

    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

PafArray PafArray::from_matrix(const Matrix& m) {
    return {{static_cast<std::uint32_t>(m.rows), static_cast<std::uint32_t>(m.cols)}, m.data};
}

PafArray PafArray::from_vector(std::span<const float> v) {
    return {{static_cast<std::uint32_t>(v.size())}, {v.begin(), v.end()}};
}

std::size_t PafArray::element_count() const {
    return std::accumulate(dims.begin(), dims.end(), std::size_t{1},
                           [](std::size_t a, std::uint32_t b) { return a * b; });
}

Matrix PafArray::to_matrix() const {
    if (dims.size() == 1) {
        return Matrix(1, dims[0], values);
    }
    if (dims.size() != 2) {
        throw DataError("PAF array of rank " + std::to_string(dims.size()) + " is not a matrix");
    }
    return Matrix(dims[0], dims[1], values);
}

void PafFile::set(const std::string& name, PafArray array) {
    if (array.element_count() != array.values.size()) {
        throw ShapeError("PafFile::set: dims do not match value count for '" + name + "'");
    }
    for (auto& [n, a] : entries_) {
        if (n == name) {
            a = std::move(array);
            return;
        }
    }
    entries_.emplace_back(name, std::move(array));
}

bool PafFile::contains(const std::string& name) const {
    return std::any_of(entries_.begin(), entries_.end(), [&](const auto& e) { return e.first == name; });
}

const PafArray& PafFile::get(const std::string& name) const {
    for (const auto& [n, a] : entries_) {
        if (n == name) {
            return a;
        }
    }
    throw DataError("PAF entry '" + name + "' not found");
}

std::vector<std::uint8_t> PafFile::encode() const {
    std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
    put_u32(out, static_cast<std::uint32_t>(entries_.size()));
    for (const auto& [name, array] : entries_) {
        put_u32(out, static_cast<std::uint32_t>(name.size()));
        out.insert(out.end(), name.begin(), name.end());
        put_u32(out, kDtypeFloat32);
        put_u32(out, static_cast<std::uint32_t>(array.dims.size()));
        for (auto d : array.dims) {
            put_u32(out, d);
        }
        for (float v : array.values) {
            put_u32(out, std::bit_cast<std::uint32_t>(v));
        }
    }
    return out;
}

PafFile PafFile::decode(std::span<const std::uint8_t> bytes) {
    Reader r(bytes);
    if (bytes.size() < 4 || !std::equal(std::begin(kMagic), std::end(kMagic), bytes.begin())) {
        throw PafError("PAF bad magic", 0);
    }
    r.take(4, "magic");
    const std::uint32_t count = r.u32("entry count");
    PafFile file;
    std::unordered_set<std::string> seen;
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::size_t entry_start = r.pos();
        const std::uint32_t name_len = r.u32("name length");
        const auto name_bytes = r.take(name_len, "name");
        std::string name(name_bytes.begin(), name_bytes.end());
        if (!seen.insert(name).second) {
            throw PafError("PAF duplicate entry name '" + name + "'", entry_start);
        }
        const std::size_t dtype_pos = r.pos();
        if (r.u32("dtype") != kDtypeFloat32) {
            throw PafError("PAF unsupported dtype for '" + name + "'", dtype_pos);
        }
        const std::size_t rank_pos = r.pos();
        const std::uint32_t rank = r.u32("rank");
        if (rank > kMaxRank) {
            throw PafError("PAF rank too large for '" + name + "'", rank_pos);
        }
        PafArray array;
        std::size_t count_elems = 1;
        for (std::uint32_t d = 0; d < rank; ++d) {
            array.dims.push_back(r.u32("dims"));
            count_elems *= array.dims.back();
        }
        if (count_elems > r.remaining() / 4) {
            throw PafError("PAF payload of '" + name + "' exceeds file size", r.pos());
        }
        const auto payload = r.take(count_elems * 4, "payload");
        array.values.resize(count_elems);
        for (std::size_t e = 0; e < count_elems; ++e) {
            std::uint32_t v = 0;
            for (int b = 0; b < 4; ++b) {
                v |= static_cast<std::uint32_t>(payload[e * 4 + b]) << (8 * b);
            }
            array.values[e] = std::bit_cast<float>(v);
        }
        file.entries_.emplace_back(std::move(name), std::move(array));
    }
    if (r.remaining() != 0) {
        throw PafError("PAF trailing bytes after last entry", r.pos());
    }
    return file;
}

void PafFile::write(const std::filesystem::path& path) const { write_file_bytes(path, encode()); }

PafFile PafFile::read(const std::filesystem::path& path) { return decode(read_file_bytes(path)); }

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open '" + path.string() + "'");
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw DataError("cannot write '" + path.string() + "'");
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw DataError("write failed for '" + path.string() + "'");
    }
}

}  // namespace polyglot
