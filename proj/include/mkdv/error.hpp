#pragma once

#include <stdexcept>
#include <string>

namespace mkdv {

/// Invalid argument or violated precondition of a numerical routine.
class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Malformed or inconsistent experiment configuration.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A time integration or ODE solve left its stable range.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(const std::string& what, double where)
        : std::runtime_error(what), where_(where) {}

    /// Time (or ODE abscissa) at which divergence was detected.
    double where() const noexcept { return where_; }

private:
    double where_;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace mkdv
