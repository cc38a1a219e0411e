#pragma once

// Centerline tracking over a ladder of single-scale Gabor scores. Each step
// re-centers on the nearest local minimum of Re U along the scan line (dark
// vessels give negative real response at the axis even through a central
// light reflex), re-orients on the nearest local maximum of Re(-U), then
// re-selects the ladder scale with the largest response.

#include "orientrace/etos.hpp"

namespace orientrace {

struct CtosParams {
  std::vector<double> scales = default_scales();
  double lambda = 2.0;
  double eta_max = 20.0;
  int max_steps = 10000;

  // a = 3 tau / (2 pi), tau in {5,10,...,30}: oscillation wavelength == width.
  static std::vector<double> default_scales();
  void validate() const;
};

struct CtosState {
  Vec2 c;
  double theta = 0.0;
  int scale_index = 0;
  int steps = 0;
  StopReason stop = StopReason::None;
};

// One score per ladder scale, all with the same orientation sampling.
struct ScaleScoreSet {
  std::vector<double> scales;
  std::vector<OrientationScore> scores;

  void validate() const;
};

// Convenience: Gabor stacks over p.scales applied to f.
ScaleScoreSet build_gabor_ladder(const Image2D& f, const CtosParams& p, int n_orient = 36);

// Largest Re(-U_a(c,theta)) over the ladder; first entry wins ties.
int select_scale(const ScaleScoreSet& set, const Vec2& c, double theta);

StopReason ctos_step(const ScaleScoreSet& set, CtosState& state, const CtosParams& p);

// Seed = center + orientation only; initial scale by select_scale. Emits a
// centerline-only segment (u = v = c, width 0, centerline_only set).
VesselSegment ctos_track(const ScaleScoreSet& set, const Vec2& c0, double theta0,
                         const CtosParams& p, StopPolicy* policy = nullptr);

}  // namespace orientrace
