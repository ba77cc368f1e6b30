#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace anisolve {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed expression text. Carries the byte offset of the offending token.
class ParseError : public Error {
public:
    ParseError(std::string message, std::size_t offset)
        : Error(std::move(message)), offset_(offset) {}
    std::size_t offset() const { return offset_; }

private:
    std::size_t offset_;
};

/// Runtime failure while evaluating an expression (division by zero,
/// domain error, unbound variable).
class EvalError : public Error {
public:
    using Error::Error;
};

/// Mismatched layouts, invalid construction arguments, broken invariants.
class StructuralError : public Error {
public:
    using Error::Error;
};

/// Config file does not conform to the documented schema.
class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace anisolve
