#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace palcurv {

// Base of every error thrown by the library. Context strings are appended
// as the error propagates outward (e.g. "rk4 stage 3", "grid (4, 7)").
class Error : public std::runtime_error {
public:
    explicit Error(std::string msg) : std::runtime_error(msg), msg_(std::move(msg)) {}

    const char* what() const noexcept override { return msg_.c_str(); }

    void add_context(const std::string& ctx) { msg_ += " [" + ctx + "]"; }

private:
    std::string msg_;
};

class DomainError : public Error {
public:
    using Error::Error;
};

// |r_u x r_v| vanished or the chart is otherwise unusable at a point.
class SingularPointError : public Error {
public:
    using Error::Error;
};

// Principal directions are undefined; gap = k1 - k2 at the offending point.
class UmbilicError : public Error {
public:
    UmbilicError(std::string msg, double gap) : Error(std::move(msg)), gap_(gap) {}
    double gap() const noexcept { return gap_; }

private:
    double gap_;
};

class StepTooLargeError : public Error {
public:
    using Error::Error;
};

// Indeterminate forms that the caller asked to resolve and could not.
class DegenerateError : public Error {
public:
    using Error::Error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace palcurv
