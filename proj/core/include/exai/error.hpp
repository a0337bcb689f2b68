// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace exai {

/// Base for every error raised by the engine.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed text or binary input (config JSON, weight file, image header).
class ParseError : public Error {
public:
    using Error::Error;
};

/// Well-formed input that violates a structural rule: shape chains,
/// element counts, dimension mismatches between kernel operands.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// File could not be opened, read or written.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace exai
