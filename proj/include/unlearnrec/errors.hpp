#pragma once

#include <stdexcept>
#include <string>

namespace unlearnrec {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad configuration or hyperparameter value. CLI exit code 1.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Malformed, missing or inconsistent data files. CLI exit code 2.
class DataError : public Error {
public:
    using Error::Error;
};

/// Non-finite loss or intermediate value during optimization. CLI exit code 3.
class NumericError : public Error {
public:
    using Error::Error;
};

}  // namespace unlearnrec
