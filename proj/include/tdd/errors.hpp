#pragma once

#include <stdexcept>
#include <string>

namespace tdd {

// Base of every error raised by the library. Callers that only care about
// "something went wrong" catch this; the CLI maps subclasses to exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A contrastive spec that cannot be evaluated (ids out of range, empty
// targets, overlapping sets, missing contrast where one is required).
class InvalidSpecError : public Error {
public:
    using Error::Error;
};

// Token sequences or other arguments that violate an operation's precondition.
class InvalidInputError : public Error {
public:
    using Error::Error;
};

// Invalid construction parameters (toy shapes, missing key tokens, ...).
class ConfigError : public Error {
public:
    using Error::Error;
};

class UnsupportedCapabilityError : public Error {
public:
    using Error::Error;
};

// Remote backend could not be reached or answered with garbage.
class TransportError : public Error {
public:
    using Error::Error;
};

// Request exceeds the backend's context window.
class CapacityError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    using Error::Error;
};

} // namespace tdd
