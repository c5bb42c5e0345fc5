#pragma once

#include <stdexcept>
#include <string>

namespace cogplan {

// Base class for everything this library throws on purpose.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Invalid user-supplied data (empty query text, bad dataset line, ...).
// The message names the offending field.
class ValidationError : public Error {
public:
    using Error::Error;
};

// An operation was called in a state its contract forbids.
class ContractError : public Error {
public:
    using Error::Error;
};

// A state transition would push the iteration count past the configured cap.
class CapError : public Error {
public:
    using Error::Error;
};

// Backend (HTTP, script replay, search) failed to produce a response.
class TransportError : public Error {
public:
    using Error::Error;
};

// Expert output did not contain anything the structured-output grammar accepts.
class ParseError : public Error {
public:
    using Error::Error;
};

// A search call failed after the backend was reached.
class RetrievalError : public Error {
public:
    using Error::Error;
};

// Final answer synthesis failed (after the retry).
class GenerationError : public Error {
public:
    using Error::Error;
};

// A per-sample metric could not be computed (judge backend failure).
class MetricError : public Error {
public:
    using Error::Error;
};

// Malformed configuration (missing endpoint, bad config file, ...).
class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace cogplan
