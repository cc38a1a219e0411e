#include "orientrace/image.hpp"

#include <cmath>

namespace orientrace {

namespace {
int g_threads = 0;
}

void set_thread_count(int n) { g_threads = n < 0 ? 0 : n; }
int thread_count() { return g_threads; }

Image2D rotate_image(const Image2D& im, double angle, Vec2 center) {
  Image2D out(im.width, im.height, 0.0);
  const double c = std::cos(angle), s = std::sin(angle);
  for (int y = 0; y < im.height; ++y) {
    for (int x = 0; x < im.width; ++x) {
      // Pull-back: sample the source at the inverse rotation.
      const double dx = x - center.x, dy = y - center.y;
      const double sx = center.x + c * dx + s * dy;
      const double sy = center.y - s * dx + c * dy;
      if (im.in_grid(sx, sy)) out.at(x, y) = im.sample(sx, sy);
    }
  }
  return out;
}

double rel_l2(const std::vector<double>& a, const std::vector<double>& b) {
  double num = 0.0, den = 0.0;
  const size_t n = std::min(a.size(), b.size());
  for (size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    num += d * d;
    den += b[i] * b[i];
  }
  return den > 0 ? std::sqrt(num / den) : std::sqrt(num);
}

double rel_l2(const Image2D& a, const Image2D& b) { return rel_l2(a.data, b.data); }

}  // namespace orientrace
