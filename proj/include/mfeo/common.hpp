#pragma once

#include <stdexcept>
#include <string>

namespace mfeo {

// Error taxonomy mirrors the CLI exit codes: config 2, data 3, stage 4.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

struct StageError : std::runtime_error {
    explicit StageError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace mfeo
