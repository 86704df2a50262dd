#pragma once

#include <stdexcept>
#include <string>

namespace vpp {

/// Root of every error thrown by the engine.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Input file lacks a required column or is structurally malformed.
class SchemaError : public Error {
public:
    using Error::Error;
};

/// Input data is structurally fine but unusable (gaps, misaligned clocks).
class DataQualityError : public Error {
public:
    using Error::Error;
};

class LengthError : public Error {
public:
    using Error::Error;
};

/// A series with zero variance was fed to a correlation computation.
class DegenerateSeriesError : public Error {
public:
    DegenerateSeriesError(unsigned agent, const std::string& what)
        : Error(what), agent_(agent) {}
    unsigned agent() const noexcept { return agent_; }

private:
    unsigned agent_;
};

/// phi outside the open interval (0, 1) for the Gaussian contract inversion.
class BoundaryError : public Error {
public:
    using Error::Error;
};

/// Configuration validation failure; `path` names the offending field.
class ConfigError : public Error {
public:
    ConfigError(std::string path, const std::string& what)
        : Error(path + ": " + what), path_(std::move(path)) {}
    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

/// No threshold yields the requested number of disjoint cliques.
class InfeasibleError : public Error {
public:
    InfeasibleError(std::size_t max_achievable, const std::string& what)
        : Error(what), max_achievable_(max_achievable) {}
    std::size_t max_achievable() const noexcept { return max_achievable_; }

private:
    std::size_t max_achievable_;
};

}  // namespace vpp
