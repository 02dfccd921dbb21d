#pragma once

#include <stdexcept>
#include <string>

namespace mvsde {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid parameters, inconsistent grids, unknown names.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Numerical failure: implicit solver nonconvergence, step-size violation.
class NumericalError : public Error {
public:
    using Error::Error;
};

} // namespace mvsde
