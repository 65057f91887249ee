#pragma once

#include <stdexcept>
#include <string>

namespace affinecf {

/// Base of all library errors; `kind()` is a stable machine-readable tag.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& msg) : std::runtime_error(msg), kind_(std::move(kind)) {}
    const std::string& kind() const { return kind_; }

private:
    std::string kind_;
};

/// Invalid model data; `path()` names the offending field (e.g. "a_slope[1][0][0]").
class ModelError : public Error {
public:
    ModelError(std::string path, const std::string& msg) : Error("model", path + ": " + msg), path_(std::move(path)) {}
    const std::string& path() const { return path_; }

private:
    std::string path_;
};

/// A derivative was requested beyond what a jump specification can deliver.
class CapabilityError : public Error {
public:
    explicit CapabilityError(const std::string& msg) : Error("capability", msg) {}
};

/// Argument outside the domain of a map (e.g. tau >= 1).
class DomainError : public Error {
public:
    explicit DomainError(const std::string& msg) : Error("domain", msg) {}
};

/// Failure inside a reference computation (blow-up, branch singularity).
class OracleError : public Error {
public:
    explicit OracleError(const std::string& msg) : Error("oracle", msg) {}
};

}  // namespace affinecf
