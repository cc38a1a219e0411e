#pragma once

// Persistence and reporting: versioned model/seed JSON (canonical key
// order, lossless double round-trip), width-validation statistics against
// truth CSVs, feature CSV, and the overlay renderer.

#include <string>

#include "orientrace/phantom.hpp"
#include "orientrace/vasculature.hpp"

namespace orientrace {

std::string model_to_json(const VasculatureModel& model);
VasculatureModel model_from_json(const std::string& text);
void save_model(const std::string& path, const VasculatureModel& model);
VasculatureModel load_model(const std::string& path);

// Seed files: {"schema":"orientrace-seeds-1","seeds":[{cx,cy,theta,ux,uy,vx,vy}]}
// Edge fields are optional (ctos seeds carry center + orientation only).
struct SeedSpec {
  Vec2 c;
  double theta = 0.0;
  std::optional<Vec2> u, v;
};
std::vector<SeedSpec> seeds_from_json(const std::string& text);
std::string seeds_to_json(const std::vector<SeedSpec>& seeds);
std::vector<SeedSpec> load_seeds(const std::string& path);

// Truth profiles: csv columns id, ux, uy, vx, vy, width (header optional).
struct TruthProfile {
  std::string id;
  Vec2 u, v;
  double width = 0.0;
};
std::vector<TruthProfile> parse_truth_csv(const std::string& text);
std::vector<TruthProfile> load_truth_csv(const std::string& path);

struct WidthStats {
  int total = 0;
  int matched = 0;
  double success_pct = 0.0;
  double mean_width = 0.0;   // matched measurements
  double mean_chi = 0.0;     // mean (measured - truth)
  double sigma_chi = 0.0;    // stddev of the signed errors
  double slope = 1.0;        // least squares measured vs truth
  double intercept = 0.0;
};

// Match each truth profile to the nearest measured point (center distance)
// within match_radius; unmatched profiles count as failures.
WidthStats validate_widths(const VasculatureModel& model,
                           const std::vector<TruthProfile>& truth, double match_radius);

std::string features_csv(const FeatureTables& tables);

// Ground-truth JSON for a phantom scene (geometry + expected topology).
std::string scene_truth_json(const phantom::Scene& scene);

// Edges red, centerline cyan, bifurcations yellow, crossings red markers.
struct OverlayImage {
  int width = 0, height = 0;
  std::vector<uint8_t> rgb;
};
OverlayImage render_overlay(const Image2D& base, const VasculatureModel& model);
void save_overlay(const std::string& path, const OverlayImage& overlay);

}  // namespace orientrace
