#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gwflow {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the operation's domain (negative z, s outside [0,1], ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// A constructed generating function is not a probability generating function.
class ValidityError : public Error {
public:
    ValidityError(const std::string& what, std::size_t offending_order)
        : Error(what), order_(offending_order) {}

    [[nodiscard]] std::size_t offending_order() const noexcept { return order_; }

private:
    std::size_t order_;
};

/// A site population exceeded the configured cap (supercritical blow-up).
class PopulationCapError : public Error {
public:
    using Error::Error;
};

/// ODE state left the finite, bounded region.
class BlowUpError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace gwflow
