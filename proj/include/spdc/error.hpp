#pragma once

#include <stdexcept>
#include <string>

namespace spdc {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid physical input: out-of-band frequency, evanescent wave, no phase
// matching, backward geometry. Maps to CLI exit code 2.
class PhysicsError : public Error {
public:
    using Error::Error;
};

class DomainError : public PhysicsError {
public:
    using PhysicsError::PhysicsError;
};

class EvanescentWaveError : public PhysicsError {
public:
    using PhysicsError::PhysicsError;
};

class GeometryError : public PhysicsError {
public:
    using PhysicsError::PhysicsError;
};

class NoPhaseMatchingError : public PhysicsError {
public:
    using PhysicsError::PhysicsError;
};

// Numerical failure: quadrature did not converge, singular matrix, window too
// small, invalid analytic regime. Maps to CLI exit code 3.
class NumericError : public Error {
public:
    using Error::Error;
};

class AccuracyError : public NumericError {
public:
    AccuracyError(const std::string& what, double estimate, double error)
        : NumericError(what), estimate_(estimate), error_(error)
    {
    }
    double estimate() const { return estimate_; }
    double error_estimate() const { return error_; }

private:
    double estimate_;
    double error_;
};

class SingularMatrixError : public NumericError {
public:
    SingularMatrixError(const std::string& what, double condition)
        : NumericError(what), condition_(condition)
    {
    }
    double condition() const { return condition_; }

private:
    double condition_;
};

class WindowError : public NumericError {
public:
    using NumericError::NumericError;
};

class ValidityError : public NumericError {
public:
    using NumericError::NumericError;
};

class ShapeError : public NumericError {
public:
    using NumericError::NumericError;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace spdc
