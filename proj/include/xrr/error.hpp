#pragma once

#include <stdexcept>
#include <string>

namespace xrr {

/// Base class for all engine errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Bad configuration values (violated invariants, unknown enum names).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Filesystem problems: missing files, unreadable paths, failed writes.
class IoError : public Error {
public:
    using Error::Error;
};

/// Malformed records in an otherwise readable file.
class FormatError : public Error {
public:
    using Error::Error;
};

/// A completion or embedding backend failed permanently.
class BackendError : public Error {
public:
    using Error::Error;
};

/// The backend answered, but not in the shape the protocol promises.
class ProtocolError : public BackendError {
public:
    using BackendError::BackendError;
};

/// Transient backend failure (timeout, connection reset, 429/5xx);
/// eligible for retry. Escalates to BackendError once retries are spent.
class TransientError : public BackendError {
public:
    using BackendError::BackendError;
};

} // namespace xrr
