#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dwlab {

/// Precondition or contract violation on caller-supplied input.
class SpecificationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Operation invoked with an input of the wrong kind (e.g. feature noise spec
/// passed to the label-noise operator).
class WrongOperationError : public SpecificationError {
public:
    using SpecificationError::SpecificationError;
};

class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Quantity is undefined at the given input (zero-norm parameters, zero vectors).
class UndefinedError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class InvariantViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class NotSeparableError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SupportMismatchError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class DegenerateSampleError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class EstimationFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Training objective became NaN or infinite.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(std::size_t epoch, const std::string& what)
        : std::runtime_error(what + " (epoch " + std::to_string(epoch) + ")"), epoch_(epoch) {}

    std::size_t epoch() const noexcept { return epoch_; }

private:
    std::size_t epoch_;
};

}  // namespace dwlab
