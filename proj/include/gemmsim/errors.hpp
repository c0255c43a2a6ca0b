#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gemmsim {

// Root of every error the simulator throws.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Platform configuration rejected by validate().
class ConfigError : public Error {
public:
    using Error::Error;
};

class ZeroParamError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

class PrecisionError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

class BandwidthError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

class ShapeMismatchError : public Error {
public:
    using Error::Error;
};

class OutOfRangeError : public Error {
public:
    using Error::Error;
};

class MisalignedError : public Error {
public:
    using Error::Error;
};

// Operand footprint of a job does not fit the scratchpad.
class CapacityError : public Error {
public:
    using Error::Error;
};

class FieldOverflowError : public Error {
public:
    using Error::Error;
};

class UnknownCsrError : public Error {
public:
    using Error::Error;
};

class SimulationError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    ParseError(std::string source, std::size_t line, std::string field, const std::string& what)
        : Error(source + ":" + std::to_string(line) + (field.empty() ? "" : " [" + field + "]") +
                ": " + what),
          source_(std::move(source)),
          line_(line),
          field_(std::move(field)) {}

    const std::string& source() const noexcept { return source_; }
    std::size_t line() const noexcept { return line_; }
    const std::string& field() const noexcept { return field_; }

private:
    std::string source_;
    std::size_t line_;
    std::string field_;
};

}  // namespace gemmsim
