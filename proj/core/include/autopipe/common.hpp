#pragma once

#include <stdexcept>
#include <string>

namespace autopipe {

/// Base error for everything this library throws.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Bad user input: unreadable files, malformed CSV, invalid preconditions.
class DataError : public Error {
public:
    explicit DataError(const std::string& msg) : Error(msg) {}
};

/// Bad configuration: unknown names, missing fields, contradictory settings.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

} // namespace autopipe
