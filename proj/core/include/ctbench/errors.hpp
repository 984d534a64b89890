#pragma once

#include <stdexcept>
#include <string>

namespace ctbench {

/// Bad inputs: missing/malformed files, dimension mismatches, invalid configs.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Numerical failure: divergence, non-finite intermediates.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace ctbench
