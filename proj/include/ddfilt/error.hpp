#pragma once

#include <stdexcept>
#include <string>

namespace ddfilt {

// Base of everything the library throws on purpose.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Input violates a documented precondition (bad flag, invalid sequence, ...).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

// A numerical routine could not deliver a result (no crossing, quadrature
// ceiling, optimizer infeasibility).
class NumericalError : public Error {
public:
    using Error::Error;
};

// Measurement channel failure: spawn, timeout, malformed response.
class ProbeError : public Error {
public:
    using Error::Error;
};

}  // namespace ddfilt
