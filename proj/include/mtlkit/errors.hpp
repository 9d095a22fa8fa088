#pragma once

#include <stdexcept>
#include <string>

namespace mtlkit {

// Exit-code mapping: ConfigError -> 2, DataFormatError -> 3, NumericError
// and everything else -> 1.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DataFormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace mtlkit
