#pragma once

#include <stdexcept>
#include <string>

namespace tetris {

// Base of every exception thrown by the library. kind() is a short,
// machine-parsable tag used by the CLI when reporting failures.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual const char* kind() const noexcept { return "error"; }
};

class InvalidArgument : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "invalid_argument"; }
};

// Non-finite values, non-convergent solvers, diverging training.
class NumericalError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "numerical"; }
};

class IoError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "io"; }
};

} // namespace tetris
