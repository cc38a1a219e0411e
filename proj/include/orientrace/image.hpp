#pragma once

// Image2D: row-major double grid in [0,1] nominal range, with an optional
// inside-field-of-view mask (nonzero = inside).

#include <cstdint>
#include <vector>

#include "orientrace/common.hpp"

namespace orientrace {

// Extension convention for filters near the border.
enum class Boundary { Periodic, Mirror };

struct Image2D {
  int width = 0;
  int height = 0;
  std::vector<double> data;
  std::vector<uint8_t> mask;  // empty = everything inside

  Image2D() = default;
  Image2D(int w, int h, double fill = 0.0)
      : width(w), height(h), data(static_cast<size_t>(w) * h, fill) {}

  double& at(int x, int y) { return data[static_cast<size_t>(y) * width + x]; }
  double at(int x, int y) const { return data[static_cast<size_t>(y) * width + x]; }

  bool in_grid(double x, double y) const {
    return x >= 0.0 && y >= 0.0 && x <= width - 1.0 && y <= height - 1.0;
  }

  bool in_mask(double x, double y) const {
    if (!in_grid(x, y)) return false;
    if (mask.empty()) return true;
    const int ix = static_cast<int>(std::lround(x));
    const int iy = static_cast<int>(std::lround(y));
    return mask[static_cast<size_t>(iy) * width + ix] != 0;
  }

  // Bilinear sample; caller guarantees in_grid.
  double sample(double x, double y) const {
    int ix = static_cast<int>(std::floor(x));
    int iy = static_cast<int>(std::floor(y));
    if (ix > width - 2) ix = width - 2;
    if (iy > height - 2) iy = height - 2;
    if (ix < 0) ix = 0;
    if (iy < 0) iy = 0;
    const double dx = x - ix, dy = y - iy;
    const double a = at(ix, iy), b = at(ix + 1, iy);
    const double c = at(ix, iy + 1), d = at(ix + 1, iy + 1);
    return a * (1 - dx) * (1 - dy) + b * dx * (1 - dy) + c * (1 - dx) * dy + d * dx * dy;
  }

  double mean() const {
    double s = 0.0;
    for (double v : data) s += v;
    return data.empty() ? 0.0 : s / data.size();
  }
};

// Bilinear rotation about a center, used by covariance tests and phantoms.
Image2D rotate_image(const Image2D& im, double angle, Vec2 center);

double rel_l2(const std::vector<double>& a, const std::vector<double>& b);
double rel_l2(const Image2D& a, const Image2D& b);

}  // namespace orientrace
