#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace halluc {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed user input: annotation lines, bitext, eval records.
class InputError : public Error {
public:
    using Error::Error;
};

class ParseError : public InputError {
public:
    ParseError(std::size_t token_index, const std::string& what)
        : InputError("token " + std::to_string(token_index) + ": " + what), token_index_(token_index) {}

    std::size_t token_index() const noexcept { return token_index_; }

private:
    std::size_t token_index_;
};

/// Raised by metrics whose value is mathematically undefined for the input.
class DegenerateError : public Error {
public:
    using Error::Error;
};

/// Failures talking to the external inference service.
class RemoteError : public Error {
public:
    using Error::Error;
};

class TransportError : public RemoteError {
public:
    using RemoteError::RemoteError;
};

class ProtocolError : public RemoteError {
public:
    using RemoteError::RemoteError;
};

/// The service returned a sequence that still contains a mask sentinel.
class SentinelError : public RemoteError {
public:
    using RemoteError::RemoteError;
};

}  // namespace halluc
