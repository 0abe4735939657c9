#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

namespace msense {

// Row-major depth image in meters. Non-finite or non-positive samples are
// invalid.
struct DepthMap {
  int width = 0;
  int height = 0;
  std::vector<float> values;

  DepthMap() = default;
  DepthMap(int w, int h, float fill = std::numeric_limits<float>::quiet_NaN())
      : width(w), height(h), values(static_cast<std::size_t>(w) * h, fill) {}

  float at(int u, int v) const {
    return values[static_cast<std::size_t>(v) * width + u];
  }
  float& at(int u, int v) {
    return values[static_cast<std::size_t>(v) * width + u];
  }

  static bool is_valid(float z) { return std::isfinite(z) && z > 0.0f; }

  std::size_t valid_count() const {
    std::size_t n = 0;
    for (float z : values) n += is_valid(z) ? 1 : 0;
    return n;
  }
};

}  // namespace msense
