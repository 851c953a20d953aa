#pragma once

#include <cstdint>
#include <vector>

namespace ppknn {

/// One database row: m integer attributes plus a class label in [0, w).
struct PlainRecord {
  std::vector<uint64_t> attributes;
  uint64_t label = 0;

  friend bool operator==(const PlainRecord&, const PlainRecord&) = default;
};

}  // namespace ppknn
