#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace levylan {

inline constexpr const char* kSchemaVersion = "1.0";

using cplx = std::complex<double>;

// Contract violations (bad arguments, malformed configs).
struct config_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Numeric failures the caller may want to catch (budget exhausted,
// divergent integral, insufficient decay).
struct numeric_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr double kPi = 3.141592653589793238462643383279502884;

}  // namespace levylan
