#include "orientrace/model_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "orientrace/image_io.hpp"

namespace orientrace {

using json = nlohmann::json;  // std::map storage = alphabetical keys = canonical dumps

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::NotFound, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::NotFound, "cannot write " + path);
  out << text;
}

StopReason stop_reason_from_name(const std::string& s) {
  if (s == "none") return StopReason::None;
  if (s == "boundary") return StopReason::Boundary;
  if (s == "overlap") return StopReason::Overlap;
  if (s == "low vessel value") return StopReason::LowVesselValue;
  if (s == "lost center") return StopReason::LostCenter;
  if (s == "max steps") return StopReason::MaxSteps;
  throw Error(ErrorCode::FormatError, "unknown stop reason: " + s);
}

// Shortest round-trip decimal form (CSV output).
std::string fmt_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

json params_to_json(const VasculatureParams& p) {
  json j;
  j["n_orient"] = p.n_orient;
  j["lambda"] = p.etos.lambda;
  j["eta_max"] = p.etos.eta_max;
  j["sigma"] = p.etos.sigma;
  j["history"] = p.etos.history;
  j["max_steps"] = p.etos.max_steps;
  j["expected_disk_radius"] = p.expected_disk_radius;
  j["seed_step_deg"] = p.seed_step_deg;
  j["seed_merge_angle_deg"] = p.seed_merge_angle_deg;
  j["junction_prominence"] = p.junction_prominence;
  j["width_gate"] = p.width_gate;
  j["dup_angle_deg"] = p.dup_angle_deg;
  j["cross_angle_deg"] = p.cross_angle_deg;
  j["sr_cost_ratio"] = p.sr_cost_ratio;
  j["disk_confidence_min"] = p.disk_confidence_min;
  j["max_segments"] = p.max_segments;
  return j;
}

VasculatureParams params_from_json(const json& j) {
  VasculatureParams p;
  p.n_orient = j.at("n_orient").get<int>();
  p.etos.lambda = j.at("lambda").get<double>();
  p.etos.eta_max = j.at("eta_max").get<double>();
  p.etos.sigma = j.at("sigma").get<double>();
  p.etos.history = j.at("history").get<int>();
  p.etos.max_steps = j.at("max_steps").get<int>();
  p.expected_disk_radius = j.at("expected_disk_radius").get<double>();
  p.seed_step_deg = j.at("seed_step_deg").get<double>();
  p.seed_merge_angle_deg = j.at("seed_merge_angle_deg").get<double>();
  p.junction_prominence = j.at("junction_prominence").get<double>();
  p.width_gate = j.at("width_gate").get<double>();
  p.dup_angle_deg = j.at("dup_angle_deg").get<double>();
  p.cross_angle_deg = j.at("cross_angle_deg").get<double>();
  p.sr_cost_ratio = j.at("sr_cost_ratio").get<double>();
  p.disk_confidence_min = j.at("disk_confidence_min").get<double>();
  p.max_segments = j.at("max_segments").get<int>();
  return p;
}

}  // namespace

std::string model_to_json(const VasculatureModel& model) {
  json j;
  j["schema"] = "orientrace-model-1";
  j["disk"] = {{"confidence", model.disk.confidence},
               {"cx", model.disk.center.x},
               {"cy", model.disk.center.y},
               {"radius", model.disk.radius}};
  j["avg_width"] = model.avg_width;
  j["t_nu"] = model.t_nu;
  j["params"] = params_to_json(model.params);
  j["segments"] = json::array();
  for (const VesselSegment& s : model.segments) {
    json js;
    js["id"] = s.id;
    if (s.parent_id)
      js["parent"] = *s.parent_id;
    else
      js["parent"] = nullptr;
    js["stop"] = stop_reason_name(s.stop);
    js["centerline_only"] = s.centerline_only;
    js["points"] = json::array();
    for (const TrackPoint& p : s.points) {
      json jp;
      jp["cx"] = p.c.x;
      jp["cy"] = p.c.y;
      jp["theta"] = p.theta;
      if (!s.centerline_only) {
        jp["ux"] = p.u.x;
        jp["uy"] = p.u.y;
        jp["vx"] = p.v.x;
        jp["vy"] = p.v.y;
        jp["width"] = p.width;
      }
      js["points"].push_back(jp);
    }
    j["segments"].push_back(js);
  }
  j["junctions"] = json::array();
  for (const Junction& jn : model.junctions) {
    json jj;
    jj["x"] = jn.position.x;
    jj["y"] = jn.position.y;
    jj["orientation"] = jn.orientation;
    jj["kind"] = jn.kind == JunctionKind::Bifurcation ? "bifurcation" : "crossing";
    jj["segments"] = jn.segment_ids;
    j["junctions"].push_back(jj);
  }
  return j.dump(2) + "\n";
}

VasculatureModel model_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::FormatError, std::string("bad model JSON: ") + e.what());
  }
  try {
    if (j.at("schema").get<std::string>() != "orientrace-model-1")
      throw Error(ErrorCode::FormatError, "unsupported model schema");
    VasculatureModel m;
    m.disk.center = {j.at("disk").at("cx").get<double>(), j.at("disk").at("cy").get<double>()};
    m.disk.radius = j.at("disk").at("radius").get<double>();
    m.disk.confidence = j.at("disk").at("confidence").get<double>();
    m.avg_width = j.at("avg_width").get<double>();
    m.t_nu = j.at("t_nu").get<double>();
    m.params = params_from_json(j.at("params"));
    for (const json& js : j.at("segments")) {
      VesselSegment s;
      s.id = js.at("id").get<int>();
      if (!js.at("parent").is_null()) s.parent_id = js.at("parent").get<int>();
      s.stop = stop_reason_from_name(js.at("stop").get<std::string>());
      s.centerline_only = js.at("centerline_only").get<bool>();
      for (const json& jp : js.at("points")) {
        TrackPoint p;
        p.c = {jp.at("cx").get<double>(), jp.at("cy").get<double>()};
        p.theta = jp.at("theta").get<double>();
        if (s.centerline_only) {
          p.u = p.v = p.c;
          p.width = 0.0;
        } else {
          p.u = {jp.at("ux").get<double>(), jp.at("uy").get<double>()};
          p.v = {jp.at("vx").get<double>(), jp.at("vy").get<double>()};
          p.width = jp.at("width").get<double>();
        }
        s.points.push_back(p);
      }
      m.segments.push_back(std::move(s));
    }
    for (const json& jj : j.at("junctions")) {
      Junction jn;
      jn.position = {jj.at("x").get<double>(), jj.at("y").get<double>()};
      jn.orientation = jj.at("orientation").get<double>();
      const std::string kind = jj.at("kind").get<std::string>();
      if (kind == "bifurcation")
        jn.kind = JunctionKind::Bifurcation;
      else if (kind == "crossing")
        jn.kind = JunctionKind::Crossing;
      else
        throw Error(ErrorCode::FormatError, "unknown junction kind: " + kind);
      jn.segment_ids = jj.at("segments").get<std::vector<int>>();
      m.junctions.push_back(std::move(jn));
    }
    return m;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::FormatError, std::string("bad model JSON: ") + e.what());
  }
}

void save_model(const std::string& path, const VasculatureModel& model) {
  write_file(path, model_to_json(model));
}

VasculatureModel load_model(const std::string& path) { return model_from_json(read_file(path)); }

// ---------------------------------------------------------------- seeds

std::vector<SeedSpec> seeds_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::FormatError, std::string("bad seed JSON: ") + e.what());
  }
  try {
    if (j.at("schema").get<std::string>() != "orientrace-seeds-1")
      throw Error(ErrorCode::FormatError, "unsupported seed schema");
    std::vector<SeedSpec> out;
    for (const json& js : j.at("seeds")) {
      SeedSpec s;
      s.c = {js.at("cx").get<double>(), js.at("cy").get<double>()};
      s.theta = js.at("theta").get<double>();
      if (js.contains("ux")) {
        s.u = Vec2{js.at("ux").get<double>(), js.at("uy").get<double>()};
        s.v = Vec2{js.at("vx").get<double>(), js.at("vy").get<double>()};
      }
      out.push_back(s);
    }
    return out;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::FormatError, std::string("bad seed JSON: ") + e.what());
  }
}

std::string seeds_to_json(const std::vector<SeedSpec>& seeds) {
  json j;
  j["schema"] = "orientrace-seeds-1";
  j["seeds"] = json::array();
  for (const SeedSpec& s : seeds) {
    json js;
    js["cx"] = s.c.x;
    js["cy"] = s.c.y;
    js["theta"] = s.theta;
    if (s.u && s.v) {
      js["ux"] = s.u->x;
      js["uy"] = s.u->y;
      js["vx"] = s.v->x;
      js["vy"] = s.v->y;
    }
    j["seeds"].push_back(js);
  }
  return j.dump(2) + "\n";
}

std::vector<SeedSpec> load_seeds(const std::string& path) {
  return seeds_from_json(read_file(path));
}

// ---------------------------------------------------------------- truth csv

std::vector<TruthProfile> parse_truth_csv(const std::string& text) {
  std::vector<TruthProfile> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line.back() == '\r') {
      if (!line.empty()) line.pop_back();
      if (line.empty()) continue;
    }
    std::istringstream ls(line);
    std::string id, f[5];
    if (!std::getline(ls, id, ',')) continue;
    bool ok = true;
    for (int i = 0; i < 5; ++i)
      if (!std::getline(ls, f[i], ',')) ok = false;
    if (!ok) {
      if (out.empty()) continue;  // header or stray line before data
      throw Error(ErrorCode::FormatError, "short truth csv row: " + line);
    }
    TruthProfile t;
    t.id = id;
    try {
      t.u = {std::stod(f[0]), std::stod(f[1])};
      t.v = {std::stod(f[2]), std::stod(f[3])};
      t.width = std::stod(f[4]);
    } catch (const std::exception&) {
      if (out.empty()) continue;  // header row
      throw Error(ErrorCode::FormatError, "bad truth csv row: " + line);
    }
    out.push_back(t);
  }
  return out;
}

std::vector<TruthProfile> load_truth_csv(const std::string& path) {
  return parse_truth_csv(read_file(path));
}

// ---------------------------------------------------------------- stats

WidthStats validate_widths(const VasculatureModel& model,
                           const std::vector<TruthProfile>& truth, double match_radius) {
  WidthStats st;
  st.total = static_cast<int>(truth.size());
  std::vector<double> t_w, m_w;
  for (const TruthProfile& t : truth) {
    const Vec2 center = (t.u + t.v) * 0.5;
    double best = 1e300;
    const TrackPoint* hit = nullptr;
    for (const VesselSegment& s : model.segments) {
      if (s.centerline_only) continue;
      for (const TrackPoint& p : s.points) {
        const double d = (p.c - center).norm();
        if (d < best) {
          best = d;
          hit = &p;
        }
      }
    }
    if (!hit || best > match_radius) continue;
    ++st.matched;
    t_w.push_back(t.width);
    m_w.push_back(hit->width);
  }
  if (st.total > 0) st.success_pct = 100.0 * st.matched / st.total;
  const int n = st.matched;
  if (n == 0) return st;
  double mt = 0.0, mm = 0.0;
  for (int i = 0; i < n; ++i) {
    mt += t_w[i];
    mm += m_w[i];
  }
  mt /= n;
  mm /= n;
  st.mean_width = mm;
  double chi = 0.0, chi2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double c = m_w[i] - t_w[i];
    chi += c;
    chi2 += c * c;
  }
  st.mean_chi = chi / n;
  st.sigma_chi = n > 1 ? std::sqrt(std::max(0.0, (chi2 - chi * chi / n) / (n - 1))) : 0.0;
  double cov = 0.0, var = 0.0;
  for (int i = 0; i < n; ++i) {
    cov += (t_w[i] - mt) * (m_w[i] - mm);
    var += (t_w[i] - mt) * (t_w[i] - mt);
  }
  if (var > 1e-12) {
    st.slope = cov / var;
    st.intercept = mm - st.slope * mt;
  } else {
    st.slope = 1.0;
    st.intercept = mm - mt;
  }
  return st;
}

std::string features_csv(const FeatureTables& tables) {
  std::ostringstream out;
  out << "id,length,mean_width,mean_curvature,max_disk_distance\n";
  for (const SegmentFeature& f : tables.segments)
    out << f.id << ',' << fmt_double(f.length) << ',' << fmt_double(f.mean_width) << ','
        << fmt_double(f.mean_curvature) << ',' << fmt_double(f.max_disk_distance) << '\n';
  return out.str();
}

// ---------------------------------------------------------------- scene json

std::string scene_truth_json(const phantom::Scene& scene) {
  json j;
  j["schema"] = "orientrace-scene-1";
  j["width"] = scene.width;
  j["height"] = scene.height;
  j["background"] = scene.background;
  j["edge_sigma"] = scene.edge_sigma;
  j["noise_sigma"] = scene.noise_sigma;
  j["noise_seed"] = scene.noise_seed;
  j["vessels"] = json::array();
  for (const phantom::Vessel& v : scene.vessels)
    j["vessels"].push_back({{"ax", v.a.x},
                            {"ay", v.a.y},
                            {"bx", v.b.x},
                            {"by", v.b.y},
                            {"contrast", v.contrast},
                            {"reflex_contrast", v.reflex_contrast},
                            {"reflex_width", v.reflex_width},
                            {"width", v.width},
                            {"width_b", v.width_b}});
  j["disks"] = json::array();
  for (const phantom::Disk& d : scene.disks)
    j["disks"].push_back(
        {{"contrast", d.contrast}, {"cx", d.center.x}, {"cy", d.center.y}, {"radius", d.radius}});
  j["truth"] = {{"bifurcations", scene.truth_bifurcations},
                {"crossings", scene.truth_crossings},
                {"segments", scene.truth_segments}};
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------- overlay

namespace {

void put_px(OverlayImage& im, int x, int y, uint8_t r, uint8_t g, uint8_t b) {
  if (x < 0 || x >= im.width || y < 0 || y >= im.height) return;
  const size_t i = (static_cast<size_t>(y) * im.width + x) * 3;
  im.rgb[i] = r;
  im.rgb[i + 1] = g;
  im.rgb[i + 2] = b;
}

void put_round(OverlayImage& im, const Vec2& p, uint8_t r, uint8_t g, uint8_t b) {
  put_px(im, static_cast<int>(std::lround(p.x)), static_cast<int>(std::lround(p.y)), r, g, b);
}

}  // namespace

OverlayImage render_overlay(const Image2D& base, const VasculatureModel& model) {
  OverlayImage im;
  im.width = base.width;
  im.height = base.height;
  im.rgb.assign(static_cast<size_t>(base.width) * base.height * 3, 0);
  for (int y = 0; y < base.height; ++y)
    for (int x = 0; x < base.width; ++x) {
      const double v = std::clamp(base.at(x, y), 0.0, 1.0);
      const uint8_t g = static_cast<uint8_t>(std::lround(255.0 * v));
      put_px(im, x, y, g, g, g);
    }
  for (const VesselSegment& s : model.segments) {
    for (const TrackPoint& p : s.points) {
      if (!s.centerline_only) {
        put_round(im, p.u, 230, 40, 40);
        put_round(im, p.v, 230, 40, 40);
      }
      put_round(im, p.c, 0, 230, 230);
    }
  }
  for (const Junction& jn : model.junctions) {
    const int cx = static_cast<int>(std::lround(jn.position.x));
    const int cy = static_cast<int>(std::lround(jn.position.y));
    if (jn.kind == JunctionKind::Bifurcation) {
      for (int d = -3; d <= 3; ++d) {
        put_px(im, cx + d, cy, 255, 220, 0);
        put_px(im, cx, cy + d, 255, 220, 0);
      }
    } else {
      for (int d = -3; d <= 3; ++d) {
        put_px(im, cx + d, cy + d, 255, 0, 0);
        put_px(im, cx + d, cy - d, 255, 0, 0);
      }
    }
  }
  return im;
}

void save_overlay(const std::string& path, const OverlayImage& overlay) {
  save_png_rgb(path, overlay.rgb, overlay.width, overlay.height);
}

}  // namespace orientrace
