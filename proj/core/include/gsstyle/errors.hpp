#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace gsstyle {

    class Error : public std::runtime_error {
    public:
        using std::runtime_error::runtime_error;
    };

    // PLY header/body does not match the expected layout. field() names the offending property.
    class FormatError : public Error {
    public:
        FormatError(std::string field, const std::string& message)
            : Error(message),
              field_(std::move(field)) {}

        const std::string& field() const noexcept { return field_; }

    private:
        std::string field_;
    };

    class UnsupportedEncodingError : public Error {
    public:
        using Error::Error;
    };

    class IoError : public Error {
    public:
        using Error::Error;
    };

    class ArgumentError : public Error {
    public:
        using Error::Error;
    };

    // Dense jacobian would exceed the configured size bound.
    class CapacityError : public Error {
    public:
        using Error::Error;
    };

    class DegenerateEmbeddingError : public Error {
    public:
        using Error::Error;
    };

    // A provider returned something that violates its interface contract (shape, finiteness).
    class ContractError : public Error {
    public:
        using Error::Error;
    };

    // Loss or gradient became NaN/Inf during optimization. step() is the failing step.
    class NonFiniteLossError : public Error {
    public:
        NonFiniteLossError(long long step, const std::string& message)
            : Error(message),
              step_(step) {}

        long long step() const noexcept { return step_; }

    private:
        long long step_;
    };

    class BackendUnavailableError : public Error {
    public:
        using Error::Error;
    };

    // Invalid configuration value. key() is the dotted config key, e.g. "style.image".
    class ConfigError : public Error {
    public:
        ConfigError(std::string key, const std::string& message)
            : Error(message),
              key_(std::move(key)) {}

        const std::string& key() const noexcept { return key_; }

    private:
        std::string key_;
    };

    class TimetableError : public ConfigError {
    public:
        using ConfigError::ConfigError;
    };

} // namespace gsstyle
