#pragma once

#include <stdexcept>
#include <string>

namespace bdglab {

class DimensionMismatch : public std::invalid_argument {
 public:
  DimensionMismatch(const std::string& where, long expected, long got)
      : std::invalid_argument(where + ": expected dimension " + std::to_string(expected) +
                              ", got " + std::to_string(got)) {}
};

inline void require_dim(const char* where, long expected, long got) {
  if (expected != got) throw DimensionMismatch(where, expected, got);
}

}  // namespace bdglab
