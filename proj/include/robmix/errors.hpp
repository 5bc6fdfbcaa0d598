#pragma once

#include <stdexcept>
#include <string>

namespace robmix {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad arguments: non-finite data, empty inputs, invalid configuration.
class InvalidInputError : public Error {
public:
    using Error::Error;
};

/// An iterative solver produced NaN/Inf; carries the iteration index.
class NumericError : public Error {
public:
    NumericError(const std::string& msg, int iteration)
        : Error(msg + " (iteration " + std::to_string(iteration) + ")"),
          iteration_(iteration) {}
    int iteration() const { return iteration_; }

private:
    int iteration_;
};

/// A mixture component collapsed (effective weight below d+1, or zero scatter).
class DegenerateClusterError : public Error {
public:
    using Error::Error;
};

/// Every restart of a fit ended degenerate.
class FitFailureError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace robmix
