#ifndef FRACSHAPE_ERRORS_HPP
#define FRACSHAPE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace fracshape {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An input parameter is outside its admissible range. `field()` names it.
class ParameterError : public Error {
public:
    ParameterError(std::string field, const std::string& message)
        : Error(field + ": " + message), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// Objects that must agree (grids, masks, nesting) do not.
class StructuralError : public Error {
public:
    using Error::Error;
};

/// An iterative method did not reach its tolerance. `achieved()` is the best
/// residual (or tolerance) reached before giving up.
class NumericError : public Error {
public:
    NumericError(const std::string& message, double achieved)
        : Error(message + " (achieved " + std::to_string(achieved) + ")"), achieved_(achieved) {}
    double achieved() const noexcept { return achieved_; }

private:
    double achieved_;
};

/// Raised when an operation needs a nonempty mask. Callers map this onto the
/// empty-set conventions: every eigenvalue is +infinity and the resolvent is 0.
class DomainEmptyError : public Error {
public:
    DomainEmptyError() : Error("domain is empty") {}
};

class NoOverlapError : public Error {
public:
    using Error::Error;
};

class PreconditionError : public Error {
public:
    using Error::Error;
};

}  // namespace fracshape

#endif
