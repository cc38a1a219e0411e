#pragma once

// Synthetic test scenes with analytic ground truth: vessels are blurred
// dark boxes across a straight centerline (edges exactly at +-width/2), an
// optional additive bright reflex ridge runs along the axis, disks are
// blurred bright circles. Scenes carry their expected topology for the
// model-level assertions.

#include <cstdint>
#include <string>

#include "orientrace/image.hpp"

namespace orientrace {
namespace phantom {

struct Vessel {
  Vec2 a, b;  // centerline endpoints
  double width = 8.0;
  double width_b = 0.0;           // width at b when > 0 (linear ramp)
  double contrast = 0.3;          // depth below background
  double reflex_contrast = 0.0;   // central bright ridge height
  double reflex_width = 0.0;      // ridge width (0 = width/3)
};

struct Disk {
  Vec2 center;
  double radius = 0.0;
  double contrast = 0.35;   // above background
  double edge_sigma = 0.0;  // boundary softness; 0 = scene edge_sigma
};

struct Scene {
  int width = 256, height = 256;
  double background = 0.5;
  double edge_sigma = 1.0;  // profile blur
  std::vector<Vessel> vessels;
  std::vector<Disk> disks;
  double noise_sigma = 0.0;
  uint32_t noise_seed = 1;

  // Expected model topology (tree scene ground truth).
  int truth_segments = 0;
  int truth_bifurcations = 0;
  int truth_crossings = 0;
};

Image2D render(const Scene& scene);

// theta in radians; vessel through the image center.
Scene scene_straight(int size = 256, double width = 8.0, double theta = 0.0,
                     double contrast = 0.3);
// Two vessels through the center at +-half the crossing angle.
Scene scene_crossing(int size = 256, double width = 8.0, double angle = kPi / 3,
                     double contrast = 0.3);
// Two parallel vessels separated by `gap` px of background.
Scene scene_parallel(int size = 256, double width = 8.0, double gap = 3.0,
                     double contrast = 0.3);
// Straight vessel with a central light reflex.
Scene scene_reflex(int size = 256, double width = 10.0, double contrast = 0.3,
                   double reflex_contrast = 0.15);
// Vessel whose width ramps linearly w0 -> w1 along x.
Scene scene_widening(int size = 256, double w0 = 6.0, double w1 = 14.0,
                     double contrast = 0.3);
// Bright disk, optionally crossed by dark bars.
Scene scene_disk(int size = 256, double radius = 60.0, int n_bars = 0);
// Disk + trunk + two branches + one crossing vessel; truth_* filled in.
Scene scene_tree();

Scene scene_by_name(const std::string& name);

// Signed ground truth for width validation: per vessel, profiles sampled
// every `spacing` px along the centerline (csv columns: id, ux, uy, vx, vy,
// width).
std::string truth_csv(const Scene& scene, double spacing = 4.0);

}  // namespace phantom
}  // namespace orientrace
