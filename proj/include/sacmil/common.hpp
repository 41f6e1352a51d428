#pragma once

#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace sacmil {

// Error taxonomy: contract/config violations map to CLI exit 1, I/O failures
// (including malformed files) to exit 2.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ContractError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

struct FormatError : IoError {
    using IoError::IoError;
};

inline std::string shape_str(const std::vector<std::size_t>& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << 'x';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

}  // namespace sacmil
