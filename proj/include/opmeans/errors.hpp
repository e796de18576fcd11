#pragma once

#include <stdexcept>
#include <string>

namespace opmeans {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operands of incompatible shape (non-square input, mismatched dimensions).
class DimensionError : public Error {
public:
    using Error::Error;
};

/// A parameter outside its documented domain (t outside [0,1], eps <= 0, ...).
class ParameterError : public Error {
public:
    using Error::Error;
};

/// A matrix that had to be positive definite (or PSD) was not.
class SingularityError : public Error {
public:
    SingularityError(const std::string& what, double min_eigenvalue)
        : Error(what), min_eigenvalue_(min_eigenvalue) {}

    [[nodiscard]] double min_eigenvalue() const noexcept { return min_eigenvalue_; }

private:
    double min_eigenvalue_;
};

/// A scalar function produced a non-finite (or negative where forbidden) value.
class EvaluationError : public Error {
public:
    EvaluationError(const std::string& what, double argument)
        : Error(what), argument_(argument) {}

    [[nodiscard]] double argument() const noexcept { return argument_; }

private:
    double argument_;
};

/// Malformed JSON or a document that does not match the expected schema.
class ParseError : public Error {
public:
    using Error::Error;
};

}  // namespace opmeans
