#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace kegcn {

/// Shapes or widths of operands disagree.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A caller broke a documented precondition (non-scalar loss, empty rank list, ...).
class ContractError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// User-supplied data is invalid. Carries the 1-based line (0 when not line-oriented).
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what, std::size_t line = 0)
        : std::runtime_error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
          line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string key, const std::string& what)
        : std::runtime_error("config error for key '" + key + "': " + what), key_(std::move(key)) {}

    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

/// Checkpoint bytes do not follow the on-disk layout.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The requested operation does not exist for the configured propagation mode.
class UnsupportedModeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace kegcn
