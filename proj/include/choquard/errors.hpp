#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace choquard {

// Precondition violated by the caller.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// W_p or a ratio of norms has a vanishing denominator.
class UndefinedFunctional : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class UndefinedRatio : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Integrator or iteration broke down; carries the last radius reached.
class NumericalFailure : public std::runtime_error {
public:
    NumericalFailure(const std::string& what, double last_r)
        : std::runtime_error(what), last_r_(last_r) {}
    double last_r() const noexcept { return last_r_; }

private:
    double last_r_;
};

class NoSeparatrix : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidTrajectory : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidWindow : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class InvalidComparison : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Malformed CSV or JSON input; `line` is 1-based, 0 when not applicable.
class DataFormatError : public std::runtime_error {
public:
    DataFormatError(const std::string& what, std::size_t line)
        : std::runtime_error(what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

}  // namespace choquard
