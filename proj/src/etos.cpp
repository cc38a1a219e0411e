#include "orientrace/etos.hpp"

#include <algorithm>
#include <cmath>

namespace orientrace {

namespace {

double gauss(double x, double sigma) {
  return std::exp(-0.5 * x * x / (sigma * sigma)) / (std::sqrt(kTwoPi) * sigma);
}

// 3-point parabola vertex offset, clamped to half a grid step.
double parabola_offset(double ym, double y0, double yp) {
  const double denom = ym - 2.0 * y0 + yp;
  if (std::abs(denom) < 1e-300) return 0.0;
  return std::clamp(0.5 * (ym - yp) / denom, -0.5, 0.5);
}

}  // namespace

void EtosParams::validate() const {
  if (lambda <= 0.0 || eta_max <= 0.0 || sigma <= 0.0 || history < 1 || max_steps < 1)
    throw Error(ErrorCode::ParamError, "tracking parameters must be positive");
}

TrackPoint TrackPoint::from_edges(const Vec2& u, const Vec2& v, double theta) {
  TrackPoint p;
  p.u = u;
  p.v = v;
  p.c = Vec2{0.5 * (u.x + v.x), 0.5 * (u.y + v.y)};
  p.theta = theta;
  p.width = (u - v).norm();
  return p;
}

const char* stop_reason_name(StopReason r) {
  switch (r) {
    case StopReason::None: return "none";
    case StopReason::Boundary: return "boundary";
    case StopReason::Overlap: return "overlap";
    case StopReason::LowVesselValue: return "low vessel value";
    case StopReason::LostCenter: return "lost center";
    case StopReason::MaxSteps: return "max steps";
  }
  return "?";
}

double TrackState::mean_width() const {
  double w = 0.0;
  for (const TrackPoint& p : history) w += p.width;
  return history.empty() ? 0.0 : w / static_cast<double>(history.size());
}

Vec2 estimate_center(const TrackState& state, const EtosParams& p) {
  if (state.history.empty()) throw Error(ErrorCode::ParamError, "empty track state");
  const TrackPoint& prev = state.last();
  return prev.c + frame_xi(prev.theta) * p.lambda;
}

ScanProfile scan_profile(const OrientationScore& u, const Vec2& c_tilde, double theta_prev,
                         const EtosParams& p) {
  const Vec2 dir = frame_eta(theta_prev);
  ScanProfile prof;
  const int half = static_cast<int>(std::round(p.eta_max / 0.5));
  prof.etas.reserve(2 * half + 1);
  prof.values.reserve(2 * half + 1);
  prof.valid.reserve(2 * half + 1);
  int n_valid = 0;
  for (int i = -half; i <= half; ++i) {
    const double eta = 0.5 * i;
    const Vec2 pos = c_tilde + dir * eta;
    prof.etas.push_back(eta);
    const auto val = u.try_sample(pos.x, pos.y, theta_prev);
    prof.values.push_back(val.value_or(cplx(0.0)));
    prof.valid.push_back(val.has_value() ? 1 : 0);
    n_valid += val.has_value();
  }
  prof.clipped = n_valid < static_cast<int>(prof.etas.size());
  if (n_valid == 0) throw Error(ErrorCode::Boundary, "scan line fully outside the grid");
  return prof;
}

double edge_envelope(double eta, double w_bar, double sigma, double eta0) {
  return -gauss(eta + 0.5 * w_bar - eta0, sigma) + gauss(eta - 0.5 * w_bar - eta0, sigma);
}

double align_envelope(const ScanProfile& profile, double w_bar, double sigma,
                      const EtosParams& p) {
  (void)p;
  double best = 0.0, best_val = -1e300;
  const int half = static_cast<int>(std::floor(0.5 * w_bar / 0.25));
  for (int j = -half; j <= half; ++j) {
    const double eta0 = 0.25 * j;
    double corr = 0.0;
    for (size_t i = 0; i < profile.etas.size(); ++i) {
      if (!profile.valid[i]) continue;
      corr += profile.values[i].imag() * edge_envelope(profile.etas[i], w_bar, sigma, eta0);
    }
    // Ties resolve toward smaller |eta0|, then smaller eta0 (scan order
    // handles the latter; the strict > handles the former via ordering).
    const bool better =
        corr > best_val ||
        (corr == best_val && (std::abs(eta0) < std::abs(best) ||
                              (std::abs(eta0) == std::abs(best) && eta0 < best)));
    if (better) {
      best_val = corr;
      best = eta0;
    }
  }
  return best;
}

namespace {

struct LineOptimum {
  double eta = 0.0;
  bool at_boundary = false;
  bool found = false;
};

// argmax of sign * Im(I) * |E| over the valid etas in [lo, hi], parabola
// refined on the weighted objective.
LineOptimum optimize_edges(const ScanProfile& prof, double w_bar, double sigma, double eta0,
                           double lo, double hi, double sign) {
  const int n = static_cast<int>(prof.etas.size());
  std::vector<double> obj(n, -1e300);
  int best = -1;
  for (int i = 0; i < n; ++i) {
    const double eta = prof.etas[i];
    if (eta < lo || eta > hi || !prof.valid[i]) continue;
    obj[i] = sign * prof.values[i].imag() * std::abs(edge_envelope(eta, w_bar, sigma, eta0));
    if (best < 0 || obj[i] > obj[best]) best = i;
  }
  LineOptimum out;
  if (best < 0) return out;
  out.found = true;
  out.at_boundary = prof.etas[best] <= lo + 0.25 || prof.etas[best] >= hi - 0.25 ||
                    best == 0 || best == n - 1;
  double eta = prof.etas[best];
  if (best > 0 && best < n - 1 && obj[best - 1] > -1e300 && obj[best + 1] > -1e300)
    eta += 0.5 * parabola_offset(obj[best - 1], obj[best], obj[best + 1]);
  out.eta = eta;
  return out;
}

}  // namespace

EdgePair detect_edges(const ScanProfile& profile, double w_bar, double sigma, double eta0) {
  const double eta_max = profile.etas.empty() ? 0.0 : profile.etas.back();
  // Left edge: Im minimum on [-eta_max, eta0]; right edge: Im maximum on
  // [eta0, eta_max] (dark vessel polarity).
  const LineOptimum left = optimize_edges(profile, w_bar, sigma, eta0, -eta_max, eta0, -1.0);
  const LineOptimum right = optimize_edges(profile, w_bar, sigma, eta0, eta0, eta_max, 1.0);
  if (!left.found || !right.found)
    throw Error(ErrorCode::Boundary, "edge search interval empty");
  EdgePair pair;
  pair.eta_left = left.eta;
  pair.eta_right = right.eta;
  pair.at_boundary = left.at_boundary || right.at_boundary;
  return pair;
}

OrientationEstimate detect_orientation(const OrientationScore& score, const Vec2& u,
                                       const Vec2& v, double theta_prev) {
  const int n = score.n_orient;
  const double s_theta = kTwoPi / n;
  std::vector<double> obj(n, -1e300);
  int best = -1;
  bool any = false, flat = true;
  double first = 0.0;
  for (int i = 0; i < n; ++i) {
    const double theta = i * s_theta;
    if (circ_dist(theta, theta_prev) > kPi / 2 + 1e-12) continue;
    const auto su = score.try_sample(u.x, u.y, theta);
    const auto sv = score.try_sample(v.x, v.y, theta);
    if (!su || !sv) continue;
    obj[i] = -su->imag() + sv->imag();
    if (!any) {
      first = obj[i];
      any = true;
    } else if (obj[i] != first) {
      flat = false;
    }
    // Ties go to the candidate closest to the previous orientation.
    if (best < 0 || obj[i] > obj[best] ||
        (obj[i] == obj[best] && circ_dist(theta, theta_prev) < circ_dist(best * s_theta, theta_prev)))
      best = i;
  }
  OrientationEstimate est;
  if (!any || flat) {
    est.theta = theta_prev;
    est.low_confidence = true;
    return est;
  }
  const double om = obj[(best + n - 1) % n] > -1e300 ? obj[(best + n - 1) % n] : obj[best];
  const double op = obj[(best + 1) % n] > -1e300 ? obj[(best + 1) % n] : obj[best];
  double theta = best * s_theta + s_theta * parabola_offset(om, obj[best], op);
  // Keep the gate exact after refinement.
  const double d = wrap_pi(theta - theta_prev);
  if (d > kPi / 2) theta = theta_prev + kPi / 2;
  if (d < -kPi / 2) theta = theta_prev - kPi / 2;
  est.theta = wrap_two_pi(theta);
  return est;
}

StopReason etos_step(const OrientationScore& score, TrackState& state, const EtosParams& p) {
  const TrackPoint& prev = state.last();
  const Vec2 c_tilde = estimate_center(state, p);
  if (!(c_tilde.x >= 0.0 && c_tilde.x <= score.width - 1 && c_tilde.y >= 0.0 &&
        c_tilde.y <= score.height - 1))
    return StopReason::Boundary;
  ScanProfile prof;
  try {
    prof = scan_profile(score, c_tilde, prev.theta, p);
  } catch (const Error& e) {
    if (e.code == ErrorCode::Boundary) return StopReason::Boundary;
    throw;
  }
  const double w_bar = state.mean_width();
  const double eta0 = align_envelope(prof, w_bar, p.sigma, p);
  EdgePair edges;
  try {
    edges = detect_edges(prof, w_bar, p.sigma, eta0);
  } catch (const Error& e) {
    if (e.code == ErrorCode::Boundary) return StopReason::LostCenter;
    throw;
  }
  const Vec2 dir = frame_eta(prev.theta);
  const Vec2 u_k = c_tilde + dir * edges.eta_left;
  const Vec2 v_k = c_tilde + dir * edges.eta_right;
  const OrientationEstimate est = detect_orientation(score, u_k, v_k, prev.theta);
  state.low_confidence = est.low_confidence;

  TrackPoint pt = TrackPoint::from_edges(u_k, v_k, est.theta);
  state.history.push_back(pt);
  while (static_cast<int>(state.history.size()) > p.history) state.history.pop_front();
  ++state.steps;
  if (state.steps >= p.max_steps) return StopReason::MaxSteps;
  return StopReason::None;
}

VesselSegment etos_track(const OrientationScore& score, const TrackPoint& seed,
                         const EtosParams& p, StopPolicy* policy) {
  p.validate();
  if (seed.width <= 0.0 || (seed.u - seed.v).norm() <= 0.0)
    throw Error(ErrorCode::SeedError, "seed must have distinct edges");

  VesselSegment seg;
  seg.points.push_back(seed);
  TrackState state;
  state.history.push_back(seed);
  while (true) {
    const StopReason step = etos_step(score, state, p);
    if (step != StopReason::None && step != StopReason::MaxSteps) {
      seg.stop = step;
      break;
    }
    const TrackPoint& pt = state.last();
    const StopReason vote = policy ? policy->check(pt, state) : StopReason::None;
    if (vote != StopReason::None) {
      seg.points.push_back(pt);
      seg.stop = vote;
      break;
    }
    seg.points.push_back(pt);
    if (step == StopReason::MaxSteps) {
      seg.stop = StopReason::MaxSteps;
      break;
    }
  }
  return seg;
}

}  // namespace orientrace
