#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace cosimo {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DuplicateSimplexError : public Error {
public:
    DuplicateSimplexError(const std::string& what, std::vector<std::string> duplicates)
        : Error(what), duplicates_(std::move(duplicates)) {}
    const std::vector<std::string>& duplicates() const noexcept { return duplicates_; }

private:
    std::vector<std::string> duplicates_;
};

class DegenerateSimplexError : public Error {
public:
    using Error::Error;
};

class UnsupportedLevelError : public Error {
public:
    using Error::Error;
};

class TriangulationDegenerateError : public Error {
public:
    using Error::Error;
};

class SymmetryError : public Error {
public:
    using Error::Error;
};

class ConvergenceError : public Error {
public:
    using Error::Error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

class StaleCacheError : public Error {
public:
    using Error::Error;
};

class MissingSpectraError : public Error {
public:
    using Error::Error;
};

class MissingCacheError : public Error {
public:
    using Error::Error;
};

class DivergenceError : public Error {
public:
    using Error::Error;
};

/// Raised by config/schema validation; `issues()` holds one "json/path: message" entry per problem.
class ConfigError : public Error {
public:
    explicit ConfigError(std::vector<std::string> issues)
        : Error(join(issues)), issues_(std::move(issues)) {}
    const std::vector<std::string>& issues() const noexcept { return issues_; }

private:
    static std::string join(const std::vector<std::string>& items) {
        std::string out = "invalid configuration:";
        for (const auto& item : items) out += "\n  " + item;
        return out;
    }
    std::vector<std::string> issues_;
};

}  // namespace cosimo
