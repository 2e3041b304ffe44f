#pragma once

#include <stdexcept>
#include <string>

namespace mortality {

/// Malformed or incomplete input data (HMD files, CSV, requested windows).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A numerical routine could not produce a result (singular system, degenerate fit).
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace mortality
