#pragma once

#include <stdexcept>
#include <string>

namespace geotrace {

/// Unreadable or unusable input file. Maps to exit code 1.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid configuration value or parameter. Maps to exit code 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace geotrace
