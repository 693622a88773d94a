#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace polyglot {

/// Tensor or array dimensions do not agree with what an operation expects.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Input data is malformed, missing, or inconsistent (CLI exit code 3).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A computation produced a non-finite value (CLI exit code 4).
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Corrupt or truncated PAF container; carries the byte offset of the failure.
class PafError : public DataError {
public:
    PafError(const std::string& what, std::size_t offset)
        : DataError(what + " at byte " + std::to_string(offset)), offset_(offset) {}

    [[nodiscard]] std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

}  // namespace polyglot
