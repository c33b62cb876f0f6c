#pragma once

#include <stdexcept>
#include <string>

namespace steproute {

// Error taxonomy mirrored by the C API status codes and CLI exit codes.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad or missing configuration: unknown keys, unresolvable paths, scripted
// world misses, schema mismatches in config-like files.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// Filesystem / serialization failures and malformed data files.
class IoError : public Error {
public:
    explicit IoError(const std::string& msg) : Error(msg) {}
};

// A generator or scorer endpoint failed after exhausting retries.
class BackendError : public Error {
public:
    int attempts = 0;
    BackendError(const std::string& msg, int attempts_) : Error(msg), attempts(attempts_) {}
};

// An internal law the engine promises (label law, balance law, ...) was
// violated; always a bug or corrupted input, never a user mistake.
class InvariantError : public Error {
public:
    explicit InvariantError(const std::string& msg) : Error(msg) {}
};

} // namespace steproute
