#pragma once

#include <stdexcept>
#include <string>

namespace devfnn {

/// Malformed or unreadable input data (CSV files, metrics files,
/// checkpoints). Distinct from std::invalid_argument, which signals a
/// bad configuration value.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical failure that survived the built-in recovery paths
/// (e.g. a recursive least-squares state that cannot be reset).
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace devfnn
