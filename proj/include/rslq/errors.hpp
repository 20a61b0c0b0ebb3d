#pragma once

#include <stdexcept>
#include <string>

namespace rslq {

/// Base class for all toolkit errors. The `category()` tag is the stable,
/// machine-parseable prefix used by the CLI diagnostics.
class Error : public std::runtime_error {
public:
    Error(std::string category, const std::string& message)
        : std::runtime_error(message), category_(std::move(category)) {}

    const std::string& category() const { return category_; }

private:
    std::string category_;
};

/// Structural model validation failed (see ValidationReport for details).
class InvalidModelError : public Error {
public:
    explicit InvalidModelError(const std::string& message)
        : Error("validate", message) {}
};

/// None of the coefficient-positivity cases could be certified.
class CaseNoneError : public Error {
public:
    explicit CaseNoneError(const std::string& message)
        : Error("case", message) {}
};

/// A matrix expected to be symmetric positive definite was not.
class NotSpdError : public Error {
public:
    explicit NotSpdError(const std::string& message)
        : Error("spd", message) {}
};

/// The feedback-gain denominator lost positive definiteness during a solve.
class RhatNotPositiveError : public Error {
public:
    RhatNotPositiveError(double t, int regime, const std::string& message)
        : Error("rhat", message), t_(t), regime_(regime) {}

    double t() const { return t_; }
    int regime() const { return regime_; }

private:
    double t_;
    int regime_;
};

/// A solved grid violated one of the certified a-priori bounds.
class BoundViolationError : public Error {
public:
    explicit BoundViolationError(const std::string& message)
        : Error("bound", message) {}
};

/// A simulated state left the finite range (explosion).
class ExplosionError : public Error {
public:
    explicit ExplosionError(const std::string& message)
        : Error("explosion", message) {}
};

/// Model/config file could not be parsed.
class ParseError : public Error {
public:
    explicit ParseError(const std::string& message)
        : Error("parse", message) {}
};

}  // namespace rslq
