#pragma once

#include <stdexcept>
#include <string>

namespace irpo {

/// Invalid user-facing configuration (bad map, bad key, wrong dimensions).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A non-finite value appeared where the math requires a finite one.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A caller broke a documented precondition.
class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

inline void expects(bool condition, const std::string& what) {
    if (!condition) throw ContractViolation(what);
}

}  // namespace irpo
