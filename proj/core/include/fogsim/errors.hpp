#pragma once

#include <stdexcept>
#include <string>

namespace fogsim {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad argument to an API call (negative delay, out-of-range config, ...).
class ArgumentError : public Error {
public:
    using Error::Error;
};

/// The simulation was wired up inconsistently (unknown entity, duplicate registration).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Malformed or schema-violating input document.
class ParseError : public Error {
public:
    using Error::Error;
};

/// Input that parsed but violates a model invariant.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// A placement policy could not host some module.
class PlacementError : public Error {
public:
    PlacementError(std::string module, double residual_demand, const std::string& what)
        : Error(what), module_(std::move(module)), residual_demand_(residual_demand) {}

    const std::string& module() const noexcept { return module_; }
    double residual_demand() const noexcept { return residual_demand_; }

private:
    std::string module_;
    double residual_demand_;
};

/// An event handler failed; carries the offending event's identity.
class DispatchError : public Error {
public:
    using Error::Error;
};

}  // namespace fogsim
