#pragma once

#include <stdexcept>
#include <string>

namespace syncq {

// Bad inputs: malformed configs, violated preconditions. Maps to CLI exit code 2.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A numerical procedure could not produce a result (no root, budget overrun,
// divergent transform). Maps to CLI exit code 3.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace syncq
