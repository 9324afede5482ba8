#pragma once

#include <stdexcept>
#include <string>

namespace coret {

// Base for every error raised by the toolkit. Callers that only need to
// distinguish "usage" from "data" problems catch this.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Input data is malformed or inconsistent (bad diff, bad JSON record, ...).
class DataError : public Error {
public:
    using Error::Error;
};

// Transient failure talking to an embedding provider; safe to retry.
class RetryableError : public Error {
public:
    using Error::Error;
};

// The provider violated its declared contract (e.g. wrong dimension).
class ProtocolError : public Error {
public:
    using Error::Error;
};

}  // namespace coret
