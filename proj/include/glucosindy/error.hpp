#pragma once

#include <stdexcept>
#include <string>

namespace glucosindy {

/// Violated precondition on an argument (bad dt, out-of-range slice, ...).
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A file could not be read or written, or its content could not be parsed.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Stored model or config does not match the expected schema.
class SchemaError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace glucosindy
