#pragma once

// Paired-edge tracking: per step, a scan line perpendicular to the previous
// orientation is swept through the score, the two vessel edges are localized
// on it by an envelope-weighted optimization of Im U, and the orientation is
// re-estimated from the edge responses. Runs on a single-sided (plus) score
// so the travel direction stays unambiguous.

#include <deque>
#include <optional>
#include <vector>

#include "orientrace/oscore.hpp"

namespace orientrace {

struct EtosParams {
  double lambda = 2.0;    // step size, px
  double eta_max = 20.0;  // half scan-line length, px
  double sigma = 3.0;     // envelope Gaussian, px
  int history = 10;       // width-history length M
  int max_steps = 10000;

  void validate() const;
};

struct TrackPoint {
  Vec2 c;  // center = (u + v)/2, maintained exactly
  Vec2 u;  // left edge
  Vec2 v;  // right edge
  double theta = 0.0;
  double width = 0.0;  // = |u - v|, maintained exactly

  static TrackPoint from_edges(const Vec2& u, const Vec2& v, double theta);
};

enum class StopReason {
  None,
  Boundary,        // left the grid / mask (criterion 1)
  Overlap,         // ran along already-tracked pixels (criterion 2)
  LowVesselValue,  // vessel value under threshold (criterion 3)
  LostCenter,      // no usable optimum on the scan profile
  MaxSteps,
};

const char* stop_reason_name(StopReason r);

struct TrackState {
  std::deque<TrackPoint> history;  // most recent last; length <= params.history
  int steps = 0;
  StopReason stop = StopReason::None;
  bool low_confidence = false;  // last orientation came from the gate fallback

  const TrackPoint& last() const { return history.back(); }
  double mean_width() const;  // over the available history
};

// Scan-line samples; entries outside the grid are flagged invalid.
struct ScanProfile {
  std::vector<double> etas;
  std::vector<cplx> values;
  std::vector<uint8_t> valid;
  bool clipped = false;
};

// Per-point decision hook consulted after each appended TrackPoint.
class StopPolicy {
 public:
  virtual ~StopPolicy() = default;
  virtual StopReason check(const TrackPoint& point, const TrackState& state) = 0;
};

Vec2 estimate_center(const TrackState& state, const EtosParams& p);

// I(eta) = U(c~ + eta e_eta(theta_prev), theta_prev) at 0.5 px spacing.
// Throws Error{Boundary} when every sample is off-grid.
ScanProfile scan_profile(const OrientationScore& u, const Vec2& c_tilde, double theta_prev,
                         const EtosParams& p);

// E(eta) = -G_sigma(eta + w/2 - eta0) + G_sigma(eta - w/2 - eta0).
double edge_envelope(double eta, double w_bar, double sigma, double eta0);

// Offset eta0 in [-w/2, w/2] (0.25 px grid) maximizing sum Im(I) * E.
double align_envelope(const ScanProfile& profile, double w_bar, double sigma,
                      const EtosParams& p);

struct EdgePair {
  double eta_left = 0.0;   // argmin of Im(I)*|E| on [-eta_max, eta0]
  double eta_right = 0.0;  // argmax of Im(I)*|E| on [eta0, eta_max]
  bool at_boundary = false;
};

EdgePair detect_edges(const ScanProfile& profile, double w_bar, double sigma, double eta0);

struct OrientationEstimate {
  double theta = 0.0;
  bool low_confidence = false;  // flat objective; theta_prev returned
};

// argmax over theta of Im(-U(u,theta) + U(v,theta)), parabola-refined and
// gated to within pi/2 of theta_prev.
OrientationEstimate detect_orientation(const OrientationScore& score, const Vec2& u,
                                       const Vec2& v, double theta_prev);

// One full iteration; appends a TrackPoint on success. Returns the stop
// decision (StopReason::None means the track continues).
StopReason etos_step(const OrientationScore& score, TrackState& state, const EtosParams& p);

struct VesselSegment {
  int id = 0;
  std::optional<int> parent_id;
  std::vector<TrackPoint> points;
  StopReason stop = StopReason::None;
  bool centerline_only = false;  // widths not measured (ctos output)
};

// Runs etos_step until a stop fires; `policy` may be null. Throws
// Error{SeedError} on a degenerate (zero-width) seed.
VesselSegment etos_track(const OrientationScore& score, const TrackPoint& seed,
                         const EtosParams& p, StopPolicy* policy = nullptr);

}  // namespace orientrace
