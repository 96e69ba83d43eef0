#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace fbsde {

/// Base class for every error raised by the toolkit. `code()` is a stable
/// machine-readable identifier used by the CLI when it serializes failures.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}

    [[nodiscard]] const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

/// A coefficient handle returned a non-finite value.
class CoefficientError : public Error {
public:
    explicit CoefficientError(const std::string& message)
        : Error("coefficient_evaluation", message) {}
};

/// Arguments violate an operation's precondition.
class PreconditionError : public Error {
public:
    explicit PreconditionError(const std::string& message)
        : Error("precondition", message) {}
};

/// An iterative procedure (inner fixed point, Picard pass, delta ladder)
/// failed to converge.
class ConvergenceError : public Error {
public:
    ConvergenceError(std::string code, const std::string& message)
        : Error(std::move(code), message) {}
};

/// A bound left the representable floating range.
class OverflowError : public Error {
public:
    explicit OverflowError(const std::string& message)
        : Error("overflow", message) {}
};

}  // namespace fbsde
