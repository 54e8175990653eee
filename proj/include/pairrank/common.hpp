#pragma once

#include <stdexcept>
#include <string>

namespace pairrank {

// Error taxonomy mirrored by the CLI exit codes:
// config_error -> 2, data_error -> 3, numerical_error -> 4.
struct config_error : std::runtime_error {
    explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct data_error : std::runtime_error {
    explicit data_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct numerical_error : std::runtime_error {
    explicit numerical_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace pairrank
