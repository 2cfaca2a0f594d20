#pragma once

#include <stdexcept>
#include <string>

namespace sigmort {

/// Base of all library errors. `kind()` is the machine-readable class the CLI
/// prints, `exit_code()` the process status it maps to.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual const char* kind() const noexcept = 0;
    virtual int exit_code() const noexcept = 0;
};

class UsageError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "usage_error"; }
    int exit_code() const noexcept override { return 2; }
};

/// Rejected input: malformed files, too-short series, grid mismatches.
class DataError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "data_error"; }
    int exit_code() const noexcept override { return 3; }
};

class DimensionError : public DataError {
public:
    using DataError::DataError;
    const char* kind() const noexcept override { return "dimension_error"; }
};

/// Divergence, singular systems, failed estimation.
class NumericError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "numeric_error"; }
    int exit_code() const noexcept override { return 4; }
};

class OverflowError : public NumericError {
public:
    using NumericError::NumericError;
    const char* kind() const noexcept override { return "overflow_error"; }
};

}  // namespace sigmort
