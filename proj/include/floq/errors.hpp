#pragma once

// errors.hpp — exception types shared across the library.
//
// Each failure mode gets its own type so callers (and the CLI exit-code
// mapping) can distinguish bad input from numerical breakdown.

#include <stdexcept>
#include <string>

namespace floq {

// Base for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Input/description errors (CLI exit code 2).
struct InputError : Error {
    using Error::Error;
};

// Numerical pipeline failures (CLI exit code 3).
struct NumericalError : Error {
    using Error::Error;
};

// No convergence in an iterative method (CLI exit code 4).
struct NoConvergence : Error {
    using Error::Error;
};

struct SingularQ : NumericalError {
    using NumericalError::NumericalError;
};

struct StepSizeUnderflow : NumericalError {
    using NumericalError::NumericalError;
};

struct OutOfWindow : NumericalError {
    using NumericalError::NumericalError;
};

struct SingularMonodromy : NumericalError {
    using NumericalError::NumericalError;
};

struct AmbiguousCluster : NumericalError {
    using NumericalError::NumericalError;
};

struct ChainBreakdown : NumericalError {
    using NumericalError::NumericalError;
};

struct AnchorNotEigenvector : NumericalError {
    using NumericalError::NumericalError;
};

struct ZeroEigenvalue : NumericalError {
    using NumericalError::NumericalError;
};

struct NoRealLogarithm : NumericalError {
    using NumericalError::NumericalError;
};

struct SingularMatrix : NumericalError {
    using NumericalError::NumericalError;
};

struct NotNegativeSpectrum : NumericalError {
    using NumericalError::NumericalError;
};

struct Overflow : NumericalError {
    using NumericalError::NumericalError;
};

struct UnsupportedK : InputError {
    using InputError::InputError;
};

struct DegenerateSection : NumericalError {
    using NumericalError::NumericalError;
};

struct IndexMismatch : NumericalError {
    using NumericalError::NumericalError;
};

struct FrameDegenerate : NumericalError {
    using NumericalError::NumericalError;
};

}  // namespace floq
