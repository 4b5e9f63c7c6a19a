#pragma once

#include <stdexcept>
#include <string>

namespace treid {

// Base class for all library errors. The CLI maps these to exit code 2
// (data/contract errors); usage errors are handled by the parser (exit 1).
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Shape disagreement between tensors; message reports both shapes.
class DimensionError : public Error {
public:
    using Error::Error;
};

// Invalid configuration value (non-positive temperature, heads not
// dividing the hidden width, ...).
class ConfigError : public Error {
public:
    using Error::Error;
};

// A call-contract precondition was violated (non-unit-norm embedding,
// degenerate average, ...).
class ContractError : public Error {
public:
    using Error::Error;
};

// Bad or insufficient input data (too few procedures, missing ground
// truth, infeasible split, ...).
class DataError : public Error {
public:
    using Error::Error;
};

// File format problems: bad magic, truncation, checksum mismatch.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace treid
