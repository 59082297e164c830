#pragma once

#include <stdexcept>
#include <string>

namespace relau {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed on-disk data (bad manifest, bad CSV, unknown symbols).
class FormatError : public Error {
public:
    using Error::Error;
};

/// Input violates a documented precondition or invariant.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Filesystem failures (missing file, unwritable path).
class IoError : public Error {
public:
    using Error::Error;
};

/// Numerical failure (disconnected graph, singular system, undefined metric).
class NumericError : public Error {
public:
    using Error::Error;
};

/// Invalid run configuration (unknown keys, conflicting hashes).
class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace relau
