#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace ktraj {

using cplx = std::complex<double>;

/// Invalid argument passed to a library operation.
class ArgumentError : public std::invalid_argument {
public:
  explicit ArgumentError(const std::string& msg) : std::invalid_argument(msg) {}
};

/// Malformed or unreadable file, or a write failure.
class IoError : public std::runtime_error {
public:
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Invalid experiment configuration.
class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Training aborted at runtime (NaN loss, empty dataset mid-run).
class RuntimeAbort : public std::runtime_error {
public:
  explicit RuntimeAbort(const std::string& msg) : std::runtime_error(msg) {}
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ArgumentError(msg);
}

constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;

/// Golden-angle increment for rotated radial sampling, degrees.
constexpr double kGoldenAngleDeg = 111.246117975;

}  // namespace ktraj
