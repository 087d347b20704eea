#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace rqda {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Caller supplied something outside an operation's contract. The CLI maps
/// these to exit code 1.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

class InsufficientSamples : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

class ParseError : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

/// Numerical failures (CLI exit code 2).
class NumericalError : public Error {
public:
    using Error::Error;
};

class SpdViolation : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class ConvergenceError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// A consistent estimator left its valid regime (e.g. a non-positive
/// denominator in the resolvent-trace estimate of delta).
class DegenerateEstimate : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class InvalidRegularizer : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// beta0 + beta1 == 0 with unequal priors: the optimal bias is undefined.
class DegenerateDesign : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// 1 - gamma^2 phi phi_tilde <= 0 in the deterministic-equivalent variance terms.
class DivergedEquivalent : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class TuningFailed : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Class priors (pi0, pi1).
struct Priors {
    double pi0 = 0.5;
    double pi1 = 0.5;

    /// log(pi1 / pi0), the prior term shared by every discriminant here.
    double log_ratio() const;
    Priors swapped() const { return {pi1, pi0}; }
    void validate() const;
    static Priors from_counts(Index n0, Index n1);
};

/// Standard normal CDF.
double normal_cdf(double x);

}  // namespace rqda
