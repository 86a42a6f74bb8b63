#pragma once

#include <stdexcept>
#include <string>

namespace otlab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Shapes or dimensions do not line up.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// A caller broke an operation's precondition (wrong kind, non-scalar root, ...).
class ContractError : public Error {
public:
    using Error::Error;
};

/// A NaN or Inf showed up where a finite value is required.
class NumericError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration value or file.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

}  // namespace otlab
