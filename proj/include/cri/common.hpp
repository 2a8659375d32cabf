#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace cri {

// Bad user input: malformed data, inconsistent columns, invalid settings.
class validation_error : public std::runtime_error {
public:
  explicit validation_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failure: singular systems, degenerate variances, failed solves.
class numeric_error : public std::runtime_error {
public:
  explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

using index_t = std::ptrdiff_t;

}  // namespace cri
