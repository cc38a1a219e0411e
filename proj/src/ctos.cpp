#include "orientrace/ctos.hpp"

#include <algorithm>
#include <cmath>

namespace orientrace {

std::vector<double> CtosParams::default_scales() {
  std::vector<double> s;
  for (int tau = 5; tau <= 30; tau += 5) s.push_back(3.0 * tau / kTwoPi);
  return s;
}

void CtosParams::validate() const {
  if (scales.size() < 2) throw Error(ErrorCode::ParamError, "scale ladder needs >= 2 entries");
  for (size_t i = 1; i < scales.size(); ++i)
    if (scales[i] <= scales[i - 1])
      throw Error(ErrorCode::ParamError, "scale ladder must be strictly increasing");
  if (lambda <= 0.0 || eta_max <= 0.0 || max_steps < 1)
    throw Error(ErrorCode::ParamError, "tracking parameters must be positive");
}

void ScaleScoreSet::validate() const {
  if (scores.size() != scales.size() || scores.empty())
    throw Error(ErrorCode::ParamError, "one score per ladder scale required");
  for (const OrientationScore& s : scores)
    if (s.n_orient != scores[0].n_orient || s.width != scores[0].width ||
        s.height != scores[0].height)
      throw Error(ErrorCode::DimError, "ladder scores must share grid and orientations");
}

ScaleScoreSet build_gabor_ladder(const Image2D& f, const CtosParams& p, int n_orient) {
  p.validate();
  ScaleScoreSet set;
  set.scales = p.scales;
  set.scores.reserve(p.scales.size());
  for (double a : p.scales) {
    GaborParams gp;
    gp.n_orient = n_orient;
    gp.scale = a;
    set.scores.push_back(transform(f, build_gabor_stack(f.width, f.height, gp)));
  }
  return set;
}

namespace {

double parabola_offset(double ym, double y0, double yp) {
  const double denom = ym - 2.0 * y0 + yp;
  if (std::abs(denom) < 1e-300) return 0.0;
  return std::clamp(0.5 * (ym - yp) / denom, -0.5, 0.5);
}

double response(const OrientationScore& s, const Vec2& c, double theta) {
  const auto v = s.try_sample(c.x, c.y, theta);
  return v ? -v->real() : -1e300;
}

}  // namespace

int select_scale(const ScaleScoreSet& set, const Vec2& c, double theta) {
  int best = 0;
  double best_val = -1e300;
  for (size_t j = 0; j < set.scores.size(); ++j) {
    const double r = response(set.scores[j], c, theta);
    if (r > best_val) {  // strict: first ladder entry wins ties
      best_val = r;
      best = static_cast<int>(j);
    }
  }
  return best;
}

StopReason ctos_step(const ScaleScoreSet& set, CtosState& state, const CtosParams& p) {
  const OrientationScore& score = set.scores[state.scale_index];
  const Vec2 c_tilde = state.c + frame_xi(state.theta) * p.lambda;
  if (!(c_tilde.x >= 0.0 && c_tilde.x <= score.width - 1 && c_tilde.y >= 0.0 &&
        c_tilde.y <= score.height - 1))
    return StopReason::Boundary;

  // Step 1: nearest local minimum of Re I to eta = 0; ties toward smaller
  // |eta|, then smaller eta.
  const Vec2 dir = frame_eta(state.theta);
  const int half = static_cast<int>(std::round(p.eta_max / 0.5));
  std::vector<double> re(2 * half + 1, 1e300);
  for (int i = -half; i <= half; ++i) {
    const Vec2 pos = c_tilde + dir * (0.5 * i);
    const auto v = score.try_sample(pos.x, pos.y, state.theta);
    if (v) re[i + half] = v->real();
  }
  // A mirror-symmetric vessel sampled about its own axis yields bit-identical
  // values either side of eta = 0, so the minimum shows up as an equal-value
  // run, not a strict dip; a run flanked by larger values counts as one
  // minimum at its midpoint.
  int best_lo = -1, best_hi = -1;
  double best_eta = 0.0;
  const int m = 2 * half + 1;
  for (int i = 1; i < m;) {
    if (re[i] >= 1e300) {
      ++i;
      continue;
    }
    int j = i;
    while (j + 1 < m && re[j + 1] == re[i]) ++j;
    const bool flanked = re[i - 1] < 1e300 && re[i - 1] > re[i] && j + 1 < m &&
                         re[j + 1] < 1e300 && re[j + 1] > re[i];
    if (flanked) {
      const double eta = 0.5 * (0.5 * (i + j) - half);
      const bool closer = best_lo < 0 || std::abs(eta) < std::abs(best_eta) ||
                          (std::abs(eta) == std::abs(best_eta) && eta < best_eta);
      if (closer) {
        best_lo = i;
        best_hi = j;
        best_eta = eta;
      }
    }
    i = j + 1;
  }
  if (best_lo < 0) return StopReason::LostCenter;
  const double eta_ref =
      best_lo == best_hi
          ? best_eta + 0.5 * parabola_offset(re[best_lo - 1], re[best_lo], re[best_lo + 1])
          : best_eta;  // plateau midpoint is already the symmetric refinement
  const Vec2 c_k = c_tilde + dir * eta_ref;

  // Step 2: nearest local maximum of Re(-U) over theta to the previous
  // orientation (the objective is pi-periodic for Hermitian kernels; the
  // nearest rule picks the direction-preserving one).
  const int n = score.n_orient;
  const double s_theta = kTwoPi / n;
  std::vector<double> h(n, -1e300);
  bool any = false;
  for (int i = 0; i < n; ++i) {
    h[i] = response(score, c_k, i * s_theta);
    any = any || h[i] > -1e300;
  }
  if (!any) return StopReason::Boundary;
  int tbest = -1;
  double tbest_dist = 1e300;
  for (int i = 0; i < n; ++i) {
    const int im = (i + n - 1) % n, ip = (i + 1) % n;
    if (h[i] <= -1e300) continue;
    if (h[i] > h[im] && h[i] >= h[ip]) {
      const double d = circ_dist(i * s_theta, state.theta);
      if (d < tbest_dist - 1e-12) {
        tbest = i;
        tbest_dist = d;
      }
    }
  }
  if (tbest < 0) return StopReason::LostCenter;
  double theta_k = tbest * s_theta +
                   s_theta * parabola_offset(h[(tbest + n - 1) % n], h[tbest], h[(tbest + 1) % n]);
  theta_k = wrap_two_pi(theta_k);

  // Step 3: scale re-selection at the new pose.
  state.scale_index = select_scale(set, c_k, theta_k);
  state.c = c_k;
  state.theta = theta_k;
  ++state.steps;
  if (state.steps >= p.max_steps) return StopReason::MaxSteps;
  return StopReason::None;
}

VesselSegment ctos_track(const ScaleScoreSet& set, const Vec2& c0, double theta0,
                         const CtosParams& p, StopPolicy* policy) {
  p.validate();
  set.validate();
  const OrientationScore& first = set.scores[0];
  if (!(c0.x >= 0.0 && c0.x <= first.width - 1 && c0.y >= 0.0 && c0.y <= first.height - 1))
    throw Error(ErrorCode::SeedError, "seed outside the grid");

  CtosState state;
  state.c = c0;
  state.theta = wrap_two_pi(theta0);
  state.scale_index = select_scale(set, c0, state.theta);

  VesselSegment seg;
  seg.centerline_only = true;
  auto emit = [&](const CtosState& s) {
    TrackPoint pt;
    pt.c = pt.u = pt.v = s.c;
    pt.theta = s.theta;
    pt.width = 0.0;
    seg.points.push_back(pt);
    return pt;
  };
  emit(state);

  TrackState shadow;  // for policy callbacks
  shadow.history.push_back(seg.points.back());
  while (true) {
    const StopReason step = ctos_step(set, state, p);
    if (step != StopReason::None && step != StopReason::MaxSteps) {
      seg.stop = step;
      break;
    }
    const TrackPoint pt = emit(state);
    shadow.history.push_back(pt);
    if (shadow.history.size() > 32) shadow.history.pop_front();
    ++shadow.steps;
    const StopReason vote = policy ? policy->check(pt, shadow) : StopReason::None;
    if (vote != StopReason::None) {
      seg.stop = vote;
      break;
    }
    if (step == StopReason::MaxSteps) {
      seg.stop = StopReason::MaxSteps;
      break;
    }
  }
  return seg;
}

}  // namespace orientrace
