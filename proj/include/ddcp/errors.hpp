#pragma once

#include <stdexcept>
#include <string>

namespace ddcp {

// Error taxonomy shared by the library and the CLI exit-code contract:
//   usage/config -> 1, file/format -> 2, numeric -> 3.

// Invalid argument values, bad configuration, out-of-range parameters.
struct UsageError : std::invalid_argument {
    explicit UsageError(const std::string& what) : std::invalid_argument(what) {}
};

// Tensor shape or structural mismatches.
struct ShapeError : std::invalid_argument {
    explicit ShapeError(const std::string& what) : std::invalid_argument(what) {}
};

// Unreadable, unwritable, or malformed files.
struct FormatError : std::runtime_error {
    explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

// Non-finite values where finite ones are required (NaN loss, overflow).
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// A sample that cannot be scored (e.g. zero-norm NMSE target).
struct DegenerateInput : std::runtime_error {
    explicit DegenerateInput(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace ddcp
