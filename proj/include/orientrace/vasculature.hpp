#pragma once

// Whole-vasculature modeling: optic-disk localization, circular seed
// scanning, edge initialization through 1-D scale space, ETOS tracking with
// the model stop policy, junction candidate detection / clustering /
// classification, overlap resolving, and feature extraction. The seed queue
// is strictly FIFO and every sub-step is deterministic, so rebuilding a
// model from the same inputs is byte-identical.

#include <optional>

#include "orientrace/completion.hpp"
#include "orientrace/etos.hpp"

namespace orientrace {

struct OpticDisk {
  Vec2 center;
  double radius = 0.0;
  double confidence = 0.0;
};

enum class JunctionKind { Bifurcation, Crossing };

struct Junction {
  Vec2 position;
  double orientation = 0.0;
  JunctionKind kind = JunctionKind::Bifurcation;
  std::vector<int> segment_ids;
};

struct VasculatureParams {
  int n_orient = 36;
  EtosParams etos;
  double expected_disk_radius = 60.0;  // phase-1 window / Hough range hint
  double seed_step_deg = 1.0;          // circular profile sampling
  double seed_merge_angle_deg = 15.0;  // dedup gate across the two circles
  double junction_prominence = 0.3;    // vs along-vessel lobe height
  double width_gate = 0.3;             // widths "agree" within 30%
  double dup_angle_deg = 30.0;         // overlap case (a) direction gate
  double cross_angle_deg = 60.0;       // overlap case (b) direction gate
  double sr_cost_ratio = 1.5;          // crossing partner: cost < ratio * beta * distance
  double disk_confidence_min = 0.2;
  int max_segments = 64;

  void validate() const;
};

// Expected vessel caliber from the disk radius (0.15 mm vessels on a
// 0.92 mm-radius disk).
double avg_caliber(double disk_radius);

// Two-phase localization: local-variance argmax, then gray-closing on the
// red channel, star-profile edge focusing (edges weighted by their scale-
// space death scale) and a weighted circle Hough. Confidence is the Hough
// peak sharpness in [0,1].
OpticDisk detect_optic_disk(const Image2D& intensity, const Image2D& red,
                            double expected_radius);

// V(x) = max over theta of Re(-U(x,theta)).
Image2D vessel_likelihood(const OrientationScore& score);

struct Seed {
  Vec2 c0;
  double theta0 = 0.0;
  std::optional<int> parent_id;
};

// Local maxima above the mean on the circles {R, 1.5R}, oriented by the
// highest score modulus and pointed away from the disk; near-duplicates
// across the circles merged.
std::vector<Seed> detect_seeds(const Image2D& likelihood, const OrientationScore& score,
                               const OpticDisk& disk, const VasculatureParams& p);

// Mean of |U| along the chord u -> v at fixed theta (32-interval trapezoid).
double vessel_value(const OrientationScore& score, const Vec2& u, const Vec2& v, double theta);

struct InitialEdges {
  Vec2 u0, v0;
  double nu = 0.0;
  double width = 0.0;
};

// Edge-pair scoring on the scan line through c0, patch merging, and 1-D
// scale-space tracing to the first toppoint; nullopt when no opposite-sign
// pair exists.
std::optional<InitialEdges> initial_edges(const OrientationScore& score, const Vec2& c0,
                                          double theta0, double avg_width);

// T_nu = half the mean initialized vessel value. Throws Error{NoSeeds}.
double seed_threshold(const std::vector<double>& seed_values);

// Ownership raster for the overlap criterion; quads between consecutive
// edge pairs are painted with the owning segment id.
struct PixelMap {
  int width = 0, height = 0;
  std::vector<int> owner;  // segment id, or -1

  PixelMap() = default;
  PixelMap(int w, int h) : width(w), height(h), owner(static_cast<size_t>(w) * h, -1) {}
  int at(int x, int y) const { return owner[static_cast<size_t>(y) * width + x]; }
  bool inside(int x, int y) const { return x >= 0 && x < width && y >= 0 && y < height; }
  void paint_quad(const TrackPoint& a, const TrackPoint& b, int id);
};

struct OverlapEvent {
  int host_segment = -1;  // whose pixels the track ran over
  TrackPoint at;          // first point of the offending run
  bool fired = false;
};

// Stop policy combining the three criteria: mask exit, sustained overlap
// with other segments' pixels, and vessel value under T_nu.
class ModelStopPolicy final : public StopPolicy {
 public:
  ModelStopPolicy(const OrientationScore& score, const Image2D& mask_source,
                  const PixelMap& map, int self_id, double t_nu, double avg_width,
                  double lambda);
  StopReason check(const TrackPoint& point, const TrackState& state) override;
  const OverlapEvent& event() const { return event_; }
  int overlap_run_limit() const { return run_limit_; }

 private:
  const OrientationScore& score_;
  const Image2D& mask_source_;
  const PixelMap& map_;
  int self_id_;
  double t_nu_;
  int run_limit_;
  int run_ = 0;
  OverlapEvent event_;
};

struct JunctionCandidate {
  Vec2 position;
  double orientation = 0.0;
  int side = 0;  // -1 left edge, +1 right edge
  int segment_id = -1;
};

// Extra orientation-column maxima at the edge points, kept when they sit
// strictly between the along-vessel lobes, on the geometrically correct
// side, with prominence above the ratio of the lobe height.
std::vector<JunctionCandidate> detect_junction_candidates(const OrientationScore& plus_score,
                                                          const VesselSegment& segment,
                                                          double prominence_ratio,
                                                          double avg_width);

struct JunctionDraft {
  Vec2 position;
  double orientation = 0.0;
  int host_segment = -1;
  int support = 0;  // candidate count behind this draft
};

// Single-linkage position clustering (threshold avg_width), then one draft
// per mode of an 18-bin circular orientation histogram.
std::vector<JunctionDraft> cluster_junctions(const std::vector<JunctionCandidate>& candidates,
                                             double avg_width);

// Crossing when a partner draft sits across the host within 3*avg_width,
// the sub-Riemannian connection is cheap relative to beta*distance, and the
// measured widths agree; bifurcation otherwise. Returns the partner index
// for crossings.
JunctionKind classify_junction(const std::vector<JunctionDraft>& drafts, size_t index,
                               const std::vector<double>& draft_widths, double avg_width,
                               const VasculatureParams& p, int* partner = nullptr);

enum class OverlapResolution { DuplicateDropped, CrossingContinued, BifurcationTerminated };

// Pure decision for an overlap stop: duplicate when directions and widths
// agree, crossing when transversal with matching widths, bifurcation/touch
// otherwise.
OverlapResolution classify_overlap(const TrackPoint& incoming, const TrackPoint& established,
                                   const VasculatureParams& p);

struct VasculatureModel {
  OpticDisk disk;
  std::vector<VesselSegment> segments;
  std::vector<Junction> junctions;
  double avg_width = 0.0;
  double t_nu = 0.0;
  VasculatureParams params;
  PixelMap pixel_map;
};

// Full pipeline. `seed_override` replaces disk-based seeding (and skips the
// disk-confidence abort). Throws Error{NoSeeds} when nothing survives
// initialization and Error{Reject} on a low-confidence disk.
VasculatureModel build_vasculature(const Image2D& intensity, const Image2D& red,
                                   const VasculatureParams& p,
                                   const std::vector<Seed>* seed_override = nullptr);

struct SegmentFeature {
  int id = 0;
  double length = 0.0;
  double mean_width = 0.0;
  double mean_curvature = 0.0;
  double max_disk_distance = 0.0;  // along the tree, from the disk boundary
};

struct FeatureTables {
  std::vector<SegmentFeature> segments;
  std::vector<std::vector<double>> point_distances;  // per segment, per point
  int n_bifurcations = 0;
  int n_crossings = 0;
};

FeatureTables model_features(const VasculatureModel& model);

}  // namespace orientrace
