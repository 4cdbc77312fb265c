#pragma once

#include <stdexcept>
#include <string>

namespace mtm {

/// Invalid physical or numerical parameter (gamma outside (0, pi), lambda = 0, ...).
struct ParameterError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Two fields sampled on different grids were combined.
struct GridMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A Lax vector vanished (or underflowed) at some sample.
struct DegenerateVector : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Root finding on the Evans function did not converge.
struct NoEigenvalue : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// ODE integration produced non-finite values, or the exponent is degenerate.
struct IntegrationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Right-hand side of the resolvent violates the solvability condition.
struct OrthogonalityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// The implicit local solve of the evolver failed to converge.
struct StepError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Malformed input file.
struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace mtm
