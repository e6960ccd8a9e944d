#pragma once

#include <stdexcept>
#include <string>

namespace fdelab {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Shapes or grids of two objects do not match.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// An argument lies outside its mathematical domain.
class DomainError : public Error {
public:
    using Error::Error;
};

/// An interface was called in a way its contract forbids.
class UsageError : public Error {
public:
    using Error::Error;
};

/// A field contains non-finite values.
class InvalidFieldError : public Error {
public:
    using Error::Error;
};

/// A model produced invalid output (non-finite forcing, unstable generator, ...).
class ModelError : public Error {
public:
    using Error::Error;
};

/// The requested operation is not defined for this model.
class UnsupportedModelError : public Error {
public:
    using Error::Error;
};

/// The implicit stage iteration failed to converge at a time node.
class StiffnessError : public Error {
public:
    StiffnessError(std::size_t node, double time, double residual, const std::string& what)
        : Error(what), node_(node), time_(time), residual_(residual) {}

    std::size_t node() const { return node_; }
    double time() const { return time_; }
    double residual() const { return residual_; }

private:
    std::size_t node_;
    double time_;
    double residual_;
};

/// A verified inequality was violated; carries the witness serialized as CSV.
class PropertyFailure : public Error {
public:
    PropertyFailure(const std::string& what, std::string witness_csv)
        : Error(what), witness_csv_(std::move(witness_csv)) {}

    const std::string& witness_csv() const { return witness_csv_; }

private:
    std::string witness_csv_;
};

/// Run configuration is malformed or inconsistent.
class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace fdelab
