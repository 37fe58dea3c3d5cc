#pragma once

#include <stdexcept>
#include <string>

namespace pasm {

// Input or configuration violates a documented invariant.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Malformed or truncated serialized data.
class FormatError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

// Two computations that must agree did not.
class VerificationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace pasm
