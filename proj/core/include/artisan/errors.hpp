#pragma once

#include <stdexcept>
#include <string>

namespace artisan {

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed input text (tables, replay fixtures, manifests).
class ParseError : public Error {
public:
    using Error::Error;
};

/// Bad or missing configuration detected at startup (unknown model id,
/// missing API key, unusable cache directory).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Artifact download / provider errors. `retryable` distinguishes transient
/// HTTP failures from permanent ones such as an unsupported provider.
class FetchError : public Error {
public:
    FetchError(const std::string& what, bool retryable = false)
        : Error(what), retryable(retryable) {}
    bool retryable;
};

/// Provider-side LLM failure that survived the retry policy.
class LlmError : public Error {
public:
    using Error::Error;
};

/// Raised instead of issuing a provider call once the running cost has
/// reached the configured limit.
class BudgetExhausted : public Error {
public:
    using Error::Error;
};

/// Episode-fatal sandbox failures (dead session, unreadable workspace).
class SandboxError : public Error {
public:
    using Error::Error;
};

/// Unreadable or malformed ZIP/TAR content.
class ArchiveError : public Error {
public:
    using Error::Error;
};

} // namespace artisan
