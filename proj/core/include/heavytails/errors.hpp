#pragma once

#include <stdexcept>
#include <string>

namespace heavytails {

/// Bad user input: malformed spec strings, out-of-range parameters,
/// inconsistent configuration. Maps to CLI exit code 1.
struct ValidationError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// A distribution parameter failed its range check. Carries the field name.
struct InvalidParameter : ValidationError {
    InvalidParameter(const std::string& field, const std::string& what)
        : ValidationError(field + ": " + what), field(field) {}
    std::string field;
};

/// A textual spec could not be parsed. Carries the byte offset of the problem.
struct SpecParseError : ValidationError {
    SpecParseError(const std::string& what, std::size_t position)
        : ValidationError(what + " (at position " + std::to_string(position) + ")"),
          position(position) {}
    std::size_t position;
};

/// Numeric failure at runtime: non-convergent quadrature, divergent
/// normalizers, underflow past recoverable range. Maps to CLI exit code 2.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Adaptive quadrature exhausted its panel budget above tolerance.
struct QuadratureFailure : NumericError {
    QuadratureFailure(const std::string& what, double residual)
        : NumericError(what + " (residual estimate " + std::to_string(residual) + ")"),
          residual(residual) {}
    double residual;
};

/// E[e^{sX}] grows without bound on expanding integration windows.
struct DivergentNormalizer : NumericError {
    using NumericError::NumericError;
};

/// Upweighting threshold so deep that the base tail is zero even in log space.
struct ThresholdTooDeep : NumericError {
    using NumericError::NumericError;
};

/// Monte Carlo budget insufficient for the requested error cap.
struct BudgetExhausted : NumericError {
    using NumericError::NumericError;
};

/// Conditioning denominator vanished: threshold event has no representable mass.
struct DenominatorUnderflow : NumericError {
    using NumericError::NumericError;
};

/// Trajectory upweighting with no base mass above the threshold.
struct EmptyUpperTail : ValidationError {
    using ValidationError::ValidationError;
};

/// Trajectory enumeration would exceed the configured size bound.
struct SizeBoundExceeded : ValidationError {
    using ValidationError::ValidationError;
};

/// KL between trajectory measures whose supports disagree.
struct SupportMismatch : NumericError {
    using NumericError::NumericError;
};

/// Hill estimation requested with too few positive upper order statistics.
struct InsufficientPositiveTail : ValidationError {
    using ValidationError::ValidationError;
};

}
