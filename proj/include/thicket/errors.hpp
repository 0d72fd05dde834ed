#pragma once

#include <stdexcept>
#include <string>

namespace thicket {

// Invalid configuration or contract violation; the CLI maps this to exit code 2.
struct config_error : std::runtime_error {
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

// Non-finite values encountered mid-computation; the CLI maps this to exit code 3.
struct numerical_error : std::runtime_error {
    explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace thicket
