#pragma once

#include <stdexcept>
#include <string>

namespace ddpc {

/// Rejected input: dimension mismatch between arguments.
struct DimensionError : std::invalid_argument {
    explicit DimensionError(const std::string& what) : std::invalid_argument(what) {}
};

/// Offline trajectory too short for the requested window length.
struct InsufficientDataError : std::invalid_argument {
    explicit InsufficientDataError(const std::string& what) : std::invalid_argument(what) {}
};

/// A matrix that must be inverted is numerically singular.
struct IllConditionedError : std::runtime_error {
    IllConditionedError(const std::string& what, double cond)
        : std::runtime_error(what + " (condition number " + std::to_string(cond) + ")"),
          condition_number(cond) {}
    double condition_number;
};

/// Model-based oracle cannot be evaluated (e.g. rank-deficient observability stack).
struct SingularOracleError : std::runtime_error {
    explicit SingularOracleError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace ddpc
