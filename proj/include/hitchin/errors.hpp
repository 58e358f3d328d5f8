#pragma once

#include <stdexcept>
#include <string>

namespace hitchin {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidRankError : public Error {
public:
    using Error::Error;
};

class IndexError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

/// Diagonal solver path used with a tuple whose harmonic metric need not split.
class AnsatzError : public Error {
public:
    using Error::Error;
};

/// H failed to be positive definite, or a leading block is numerically singular.
class MetricDegeneracyError : public Error {
public:
    MetricDegeneracyError(const std::string& what, int node) : Error(what), node_(node) {}
    int node() const noexcept { return node_; }

private:
    int node_;
};

}  // namespace hitchin
