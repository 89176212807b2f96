#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dropinj {

// Two families: configuration/validation problems (caller can fix the
// inputs) and runtime failures (training diverged, bisection stalled, I/O).

class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class InputShapeError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class EmptyDataError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class DomainError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class ParseError : public ValidationError {
public:
    ParseError(const std::string& what, std::size_t row)
        : ValidationError(what), row_(row) {}
    std::size_t row() const noexcept { return row_; }

private:
    std::size_t row_;
};

class RuntimeFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DivergedTrainingError : public RuntimeFailure {
public:
    explicit DivergedTrainingError(std::size_t epoch)
        : RuntimeFailure("training diverged (non-finite loss) at epoch " + std::to_string(epoch)),
          epoch_(epoch) {}
    std::size_t epoch() const noexcept { return epoch_; }

private:
    std::size_t epoch_;
};

class NoBracketError : public RuntimeFailure {
public:
    NoBracketError(const std::string& what, int sign) : RuntimeFailure(what), sign_(sign) {}
    /// Sign of Balance over the whole search range (+1 or -1).
    int sign() const noexcept { return sign_; }

private:
    int sign_;
};

class ConvergenceError : public RuntimeFailure {
public:
    ConvergenceError(const std::string& what, double last_balance)
        : RuntimeFailure(what), last_balance_(last_balance) {}
    double last_balance() const noexcept { return last_balance_; }

private:
    double last_balance_;
};

class IoError : public RuntimeFailure {
public:
    using RuntimeFailure::RuntimeFailure;
};

} // namespace dropinj
