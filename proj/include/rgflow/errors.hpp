#pragma once

#include <stdexcept>
#include <string>

namespace rgflow {

// Error taxonomy used across the library.  The CLI maps usage_error to
// exit code 2 and everything else to exit code 1.

// Argument outside the mathematical domain of an operation.
struct domain_error : std::domain_error {
    using std::domain_error::domain_error;
};

// Malformed request (unknown enum value, mismatched windows, bad flags).
struct usage_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Quadrature or iteration failure with diagnostics in the message.
struct numerical_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A window too small for the requested computation (tail dominates value,
// or backward iteration left the representable range).
struct truncation_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A solver iterate escaped its ball.
struct divergence_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace rgflow
