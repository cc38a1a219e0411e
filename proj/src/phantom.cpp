#include "orientrace/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace orientrace {
namespace phantom {

namespace {

double phi(double x) { return 0.5 * (1.0 + std::erf(x / std::sqrt(2.0))); }

struct VesselFrame {
  Vec2 a, e;  // origin and unit axis
  double len;
};

VesselFrame frame_of(const Vessel& v) {
  const Vec2 d = v.b - v.a;
  const double len = d.norm();
  if (len <= 0.0) throw Error(ErrorCode::ParamError, "vessel endpoints coincide");
  return {v.a, d * (1.0 / len), len};
}

double vessel_width_at(const Vessel& v, double t, double len) {
  if (v.width_b <= 0.0) return v.width;
  const double r = std::clamp(t / len, 0.0, 1.0);
  return v.width + (v.width_b - v.width) * r;
}

// Deterministic standard normal: explicit Box-Muller over mt19937 draws
// (library normal_distribution is not pinned across implementations).
class NormalSource {
 public:
  explicit NormalSource(uint32_t seed) : gen_(seed) {}
  double next() {
    if (have_) {
      have_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 1e-300);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(kTwoPi * u2);
    have_ = true;
    return r * std::cos(kTwoPi * u2);
  }

 private:
  double uniform() { return (static_cast<double>(gen_()) + 0.5) / 4294967296.0; }
  std::mt19937 gen_;
  bool have_ = false;
  double spare_ = 0.0;
};

}  // namespace

Image2D render(const Scene& scene) {
  Image2D im(scene.width, scene.height);
  const double s = scene.edge_sigma;
  for (int y = 0; y < scene.height; ++y)
    for (int x = 0; x < scene.width; ++x) {
      double val = scene.background;
      const Vec2 p{static_cast<double>(x), static_cast<double>(y)};
      for (const Vessel& v : scene.vessels) {
        const VesselFrame fr = frame_of(v);
        const Vec2 rel = p - fr.a;
        const double t = rel.x * fr.e.x + rel.y * fr.e.y;
        const double d = fr.e.x * rel.y - fr.e.y * rel.x;  // signed normal offset
        const double along = phi(t / s) - phi((t - fr.len) / s);
        if (along < 1e-12) continue;
        const double w = vessel_width_at(v, t, fr.len);
        const double across = phi((d + 0.5 * w) / s) - phi((d - 0.5 * w) / s);
        val -= v.contrast * across * along;
        if (v.reflex_contrast > 0.0) {
          const double rw = v.reflex_width > 0.0 ? v.reflex_width : w / 3.0;
          const double ridge = phi((d + 0.5 * rw) / s) - phi((d - 0.5 * rw) / s);
          val += v.reflex_contrast * ridge * along;
        }
      }
      for (const Disk& dk : scene.disks) {
        const double r = (p - dk.center).norm();
        const double ds = dk.edge_sigma > 0.0 ? dk.edge_sigma : s;
        val += dk.contrast * phi((dk.radius - r) / ds);
      }
      im.at(x, y) = val;
    }
  if (scene.noise_sigma > 0.0) {
    NormalSource rng(scene.noise_seed);
    for (double& v : im.data) v += scene.noise_sigma * rng.next();
  }
  for (double& v : im.data) v = std::clamp(v, 0.0, 1.0);
  return im;
}

namespace {

Vessel through_center(int size, double theta, double width, double contrast) {
  const double c = 0.5 * (size - 1);
  const Vec2 dir = frame_xi(theta);
  Vessel v;
  v.a = Vec2{c, c} - dir * (1.2 * size);
  v.b = Vec2{c, c} + dir * (1.2 * size);
  v.width = width;
  v.contrast = contrast;
  return v;
}

}  // namespace

Scene scene_straight(int size, double width, double theta, double contrast) {
  Scene sc;
  sc.width = sc.height = size;
  sc.vessels.push_back(through_center(size, theta, width, contrast));
  sc.truth_segments = 1;
  return sc;
}

Scene scene_crossing(int size, double width, double angle, double contrast) {
  Scene sc;
  sc.width = sc.height = size;
  sc.vessels.push_back(through_center(size, 0.5 * angle, width, contrast));
  sc.vessels.push_back(through_center(size, -0.5 * angle, width, contrast));
  sc.truth_segments = 2;
  sc.truth_crossings = 1;
  return sc;
}

Scene scene_parallel(int size, double width, double gap, double contrast) {
  Scene sc;
  sc.width = sc.height = size;
  const double off = 0.5 * (width + gap);  // background gap between inner edges
  for (int sgn : {-1, 1}) {
    Vessel v = through_center(size, 0.0, width, contrast);
    v.a.y += sgn * off;
    v.b.y += sgn * off;
    sc.vessels.push_back(v);
  }
  sc.truth_segments = 2;
  return sc;
}

Scene scene_reflex(int size, double width, double contrast, double reflex_contrast) {
  Scene sc = scene_straight(size, width, 0.0, contrast);
  sc.vessels[0].reflex_contrast = reflex_contrast;
  return sc;
}

Scene scene_widening(int size, double w0, double w1, double contrast) {
  Scene sc;
  sc.width = sc.height = size;
  const double c = 0.5 * (size - 1);
  Vessel v;
  v.a = Vec2{0.0, c};
  v.b = Vec2{static_cast<double>(size - 1), c};
  v.width = w0;
  v.width_b = w1;
  v.contrast = contrast;
  sc.vessels.push_back(v);
  sc.truth_segments = 1;
  return sc;
}

Scene scene_disk(int size, double radius, int n_bars) {
  Scene sc;
  sc.width = sc.height = size;
  const double c = 0.5 * (size - 1);
  Disk d;
  d.center = Vec2{c, c};
  d.radius = radius;
  d.contrast = 0.3;
  sc.disks.push_back(d);
  for (int i = 0; i < n_bars; ++i)
    sc.vessels.push_back(through_center(size, kPi * i / n_bars, 8.0, 0.3));
  return sc;
}

Scene scene_tree() {
  Scene sc;
  sc.width = sc.height = 320;
  Disk d;
  d.center = Vec2{160.0, 160.0};
  d.radius = 40.0;
  d.contrast = 0.3;
  // Fundus-style soft pallor boundary: a crisp rim would ride the seed
  // circles as a fake tangential vessel.
  d.edge_sigma = 5.0;
  sc.disks.push_back(d);

  auto vessel = [](Vec2 a, Vec2 b, double w) {
    Vessel v;
    v.a = a;
    v.b = b;
    v.width = w;
    v.contrast = 0.32;
    return v;
  };
  // Trunk emerges from inside the disk (fundus-style: the disk interior
  // carries vessel contrast, which the variance-based localizer keys on)
  // and leaves leftward; both seed circles cross it. Calibers stay near
  // avg_caliber(R_OD) so remote vessels do not out-vote the disk region.
  sc.vessels.push_back(vessel(Vec2{160.0, 160.0}, Vec2{8.0, 160.0}, 7.0));
  // Branches start outside the seed circles; 25 degrees off vertical.
  const double sn = std::sin(25.0 * kPi / 180.0), cs = std::cos(25.0 * kPi / 180.0);
  sc.vessels.push_back(vessel(Vec2{84.0, 160.0}, Vec2{84.0 - 85.0 * sn, 160.0 - 85.0 * cs}, 5.0));
  sc.vessels.push_back(vessel(Vec2{62.0, 160.0}, Vec2{62.0 - 85.0 * sn, 160.0 + 85.0 * cs}, 5.0));
  // Crossing vessel: vertical, far from the seed circles. Its span is kept
  // clear of the branch lines so the trunk crossing is the only encounter.
  sc.vessels.push_back(vessel(Vec2{36.0, 100.0}, Vec2{36.0, 185.0}, 6.0));

  sc.truth_segments = 5;  // trunk, 2 branches, 2 crossing arms
  sc.truth_bifurcations = 2;
  sc.truth_crossings = 1;
  return sc;
}

Scene scene_by_name(const std::string& name) {
  if (name == "straight") return scene_straight();
  if (name == "crossing") return scene_crossing();
  if (name == "parallel") return scene_parallel();
  if (name == "reflex") return scene_reflex();
  if (name == "widening") return scene_widening();
  if (name == "disk") return scene_disk();
  if (name == "tree") return scene_tree();
  throw Error(ErrorCode::ParamError, "unknown scene: " + name);
}

std::string truth_csv(const Scene& scene, double spacing) {
  if (spacing <= 0.0) throw Error(ErrorCode::ParamError, "spacing must be positive");
  std::ostringstream out;
  out << "id,ux,uy,vx,vy,width\n";
  out.precision(10);
  for (size_t i = 0; i < scene.vessels.size(); ++i) {
    const Vessel& v = scene.vessels[i];
    const VesselFrame fr = frame_of(v);
    const Vec2 n{-fr.e.y, fr.e.x};
    const double margin = std::max(4.0, std::max(v.width, v.width_b));
    int k = 0;
    for (double t = margin; t <= fr.len - margin; t += spacing, ++k) {
      const Vec2 p = fr.a + fr.e * t;
      if (p.x < 2.0 || p.y < 2.0 || p.x > scene.width - 3.0 || p.y > scene.height - 3.0)
        continue;
      const double w = vessel_width_at(v, t, fr.len);
      const Vec2 u = p - n * (0.5 * w);
      const Vec2 vv = p + n * (0.5 * w);
      out << "v" << i << "_" << k << "," << u.x << "," << u.y << "," << vv.x << "," << vv.y
          << "," << w << "\n";
    }
  }
  return out.str();
}

}  // namespace phantom
}  // namespace orientrace
