#pragma once

#include <stdexcept>
#include <string>

namespace cfsync {

// Base of every error thrown by the library. Callers that only care about
// "something in cfsync failed" catch this.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A precondition on an argument was violated (bad size, out-of-range offset,
// non-BPSK chip, ...).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

// The Fisher matrix or a least-squares Gram matrix is singular or too badly
// conditioned to invert (coincident taps, zero channel, ...).
class DegenerateGeometry : public Error {
public:
    using Error::Error;
};

// Every point of an estimator's search grid was degenerate.
class EstimationFailed : public Error {
public:
    using Error::Error;
};

// No configuration satisfies the overhead budget or distance requirement.
class Infeasible : public Error {
public:
    using Error::Error;
};

// Malformed input file. `line` is 1-based, 0 when unknown.
class ParseError : public Error {
public:
    ParseError(const std::string& what, int line)
        : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line), detail_(what) {}
    int line() const noexcept { return line_; }
    // Message without the line prefix.
    const std::string& detail() const noexcept { return detail_; }

private:
    int line_;
    std::string detail_;
};

}  // namespace cfsync
