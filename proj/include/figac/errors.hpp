#pragma once

#include <stdexcept>
#include <string>

namespace figac {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A caller-supplied value violates a documented precondition.
class ParameterError : public Error {
public:
    using Error::Error;
};

/// An operation was requested in a state that cannot serve it.
class StateError : public Error {
public:
    using Error::Error;
};

/// File or stream could not be read or written.
class IoError : public Error {
public:
    using Error::Error;
};

/// Wraps an error raised inside a named pipeline stage.
class StageError : public Error {
public:
    StageError(std::string stage, const std::string& what)
        : Error(stage + ": " + what), stage_(std::move(stage)) {}

    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

}  // namespace figac
