#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cbkm {

/// Invalid configuration (bad cutoffs, degenerate ranges, bad hyperparameters).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Invalid data (non-finite samples, empty signals, dead channels).
struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed on-disk record. Carries the byte offset where parsing failed.
struct ParseError : std::runtime_error {
    std::size_t byte_offset;
    ParseError(const std::string& msg, std::size_t offset)
        : std::runtime_error(msg + " (byte offset " + std::to_string(offset) + ")"),
          byte_offset(offset) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace cbkm
