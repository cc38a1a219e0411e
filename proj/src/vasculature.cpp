#include "orientrace/vasculature.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <map>
#include <numeric>

#include "orientrace/preprocess.hpp"
#include "orientrace/spectral.hpp"

namespace orientrace {

void VasculatureParams::validate() const {
  etos.validate();
  if (n_orient <= 0 || n_orient % 2 != 0)
    throw Error(ErrorCode::ParamError, "orientation count must be even and positive");
  if (expected_disk_radius <= 0.0 || seed_step_deg <= 0.0 || max_segments < 1)
    throw Error(ErrorCode::ParamError, "bad vasculature parameters");
  if (junction_prominence <= 0.0 || junction_prominence >= 1.0 || width_gate <= 0.0 ||
      sr_cost_ratio < 1.0)
    throw Error(ErrorCode::ParamError, "bad junction parameters");
}

double avg_caliber(double disk_radius) {
  if (disk_radius <= 0.0) throw Error(ErrorCode::ParamError, "disk radius must be positive");
  // 0.15 mm vessel / 0.92 mm disk reference calibers; multiply-then-divide so
  // radii that are integer multiples of 92 map to exact results.
  return disk_radius * 15.0 / 92.0;
}

// ---------------------------------------------------------------- optic disk

namespace {

// Mean/variance over a clipped square window via summed-area tables.
Image2D local_variance(const Image2D& im, int half) {
  const int w = im.width, h = im.height;
  std::vector<double> s1(static_cast<size_t>(w + 1) * (h + 1), 0.0);
  std::vector<double> s2(static_cast<size_t>(w + 1) * (h + 1), 0.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double v = im.at(x, y);
      const size_t i = static_cast<size_t>(y + 1) * (w + 1) + (x + 1);
      s1[i] = v + s1[i - 1] + s1[i - (w + 1)] - s1[i - (w + 1) - 1];
      s2[i] = v * v + s2[i - 1] + s2[i - (w + 1)] - s2[i - (w + 1) - 1];
    }
  auto rect = [&](const std::vector<double>& s, int x0, int y0, int x1, int y1) {
    return s[static_cast<size_t>(y1) * (w + 1) + x1] - s[static_cast<size_t>(y0) * (w + 1) + x1] -
           s[static_cast<size_t>(y1) * (w + 1) + x0] + s[static_cast<size_t>(y0) * (w + 1) + x0];
  };
  Image2D out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const int x0 = std::max(0, x - half), x1 = std::min(w, x + half + 1);
      const int y0 = std::max(0, y - half), y1 = std::min(h, y + half + 1);
      const double n = static_cast<double>(x1 - x0) * (y1 - y0);
      const double m = rect(s1, x0, y0, x1, y1) / n;
      out.at(x, y) = rect(s2, x0, y0, x1, y1) / n - m * m;
    }
  return out;
}

Image2D box_mean(const Image2D& im, int half) {
  const int w = im.width, h = im.height;
  std::vector<double> s1(static_cast<size_t>(w + 1) * (h + 1), 0.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const size_t i = static_cast<size_t>(y + 1) * (w + 1) + (x + 1);
      s1[i] = im.at(x, y) + s1[i - 1] + s1[i - (w + 1)] - s1[i - (w + 1) - 1];
    }
  Image2D out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const int x0 = std::max(0, x - half), x1 = std::min(w, x + half + 1);
      const int y0 = std::max(0, y - half), y1 = std::min(h, y + half + 1);
      const double n = static_cast<double>(x1 - x0) * (y1 - y0);
      out.at(x, y) = (s1[static_cast<size_t>(y1) * (w + 1) + x1] -
                      s1[static_cast<size_t>(y0) * (w + 1) + x1] -
                      s1[static_cast<size_t>(y1) * (w + 1) + x0] +
                      s1[static_cast<size_t>(y0) * (w + 1) + x0]) /
                     n;
    }
  return out;
}

std::vector<std::pair<int, int>> disk_offsets(int radius) {
  std::vector<std::pair<int, int>> off;
  for (int dy = -radius; dy <= radius; ++dy)
    for (int dx = -radius; dx <= radius; ++dx)
      if (dx * dx + dy * dy <= radius * radius) off.emplace_back(dx, dy);
  return off;
}

Image2D gray_closing_disk(const Image2D& im, int radius) {
  const auto off = disk_offsets(radius);
  const int w = im.width, h = im.height;
  Image2D dil(w, h), out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double m = -1e300;
      for (const auto& [dx, dy] : off) {
        const int xx = std::clamp(x + dx, 0, w - 1), yy = std::clamp(y + dy, 0, h - 1);
        m = std::max(m, im.at(xx, yy));
      }
      dil.at(x, y) = m;
    }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double m = 1e300;
      for (const auto& [dx, dy] : off) {
        const int xx = std::clamp(x + dx, 0, w - 1), yy = std::clamp(y + dy, 0, h - 1);
        m = std::min(m, dil.at(xx, yy));
      }
      out.at(x, y) = m;
    }
  return out;
}

struct EdgeVote {
  Vec2 pos;
  double weight;
};

}  // namespace

OpticDisk detect_optic_disk(const Image2D& intensity, const Image2D& red,
                            double expected_radius) {
  if (intensity.width != red.width || intensity.height != red.height)
    throw Error(ErrorCode::DimError, "channel dimensions differ");
  if (expected_radius <= 0.0) throw Error(ErrorCode::ParamError, "expected radius > 0 required");

  // Phase 1: rough center = densest variance REGION, not pixel. A plain
  // bright disk has all its variance on the rim, and raw argmax sits there
  // (half-coverage maximizes p(1-p)); averaging the variance map over a
  // disk-sized window moves the peak to the ring's center.
  const int vhalf = static_cast<int>(std::round(expected_radius));
  const Image2D var = box_mean(local_variance(intensity, vhalf), vhalf);
  Vec2 rough{0.5 * (intensity.width - 1), 0.5 * (intensity.height - 1)};
  double best_var = -1.0;
  for (int y = 0; y < var.height; ++y)
    for (int x = 0; x < var.width; ++x)
      if (var.at(x, y) > best_var) {
        best_var = var.at(x, y);
        rough = Vec2{static_cast<double>(x), static_cast<double>(y)};
      }

  // Phase 2: closing removes dark vessels, then star-profile edge focusing.
  const int close_r = std::max(4, static_cast<int>(std::round(expected_radius / 7.5)));
  const Image2D closed = gray_closing_disk(red, close_r);

  const int n_prof = 72;
  const double plen = 1.6 * expected_radius;
  std::vector<EdgeVote> votes;
  ScaleLadder ladder;
  ladder.levels = 12;
  for (int k = 0; k < n_prof; ++k) {
    const double phi = kTwoPi * k / n_prof;
    const Vec2 dir{std::cos(phi), std::sin(phi)};
    std::vector<double> prof;
    for (int i = 0; i <= static_cast<int>(plen); ++i) {
      const Vec2 p = rough + dir * static_cast<double>(i);
      if (!closed.in_grid(p.x, p.y)) break;
      prof.push_back(closed.sample(p.x, p.y));
    }
    if (prof.size() < 16) continue;
    // Bright-to-dark transitions: minima of the radial derivative, weighted
    // by the scale up to which they survive.
    std::vector<double> deriv(prof.size() - 2);
    for (size_t i = 1; i + 1 < prof.size(); ++i) deriv[i - 1] = 0.5 * (prof[i + 1] - prof[i - 1]);
    const ScaleTracks tracks = toppoints_1d(scale_space_1d(deriv, ladder));
    const double top_scale = ladder.scales().back();
    for (const ExtremumTrack& t : tracks.tracks) {
      if (t.seed.is_max || std::abs(t.seed.value) < 1e-4) continue;
      const double weight = t.persisted ? 2.0 * top_scale : t.death_scale;
      votes.push_back({rough + dir * (t.seed.pos + 1.0), weight});
    }
  }

  OpticDisk disk;
  disk.center = rough;
  disk.radius = expected_radius;
  double total_weight = 0.0;
  for (const EdgeVote& v : votes) total_weight += v.weight;
  if (votes.empty() || total_weight <= 1e-12) return disk;  // confidence 0

  // Weighted circle Hough over a coarse center box and binned radii.
  const int box = static_cast<int>(std::round(0.25 * expected_radius));
  const double r_lo = 0.5 * expected_radius, r_hi = 1.5 * expected_radius;
  Vec2 best_c = rough;
  double best_votes = -1.0, best_r = expected_radius;
  for (int dy = -box; dy <= box; dy += 2)
    for (int dx = -box; dx <= box; dx += 2) {
      const Vec2 c = rough + Vec2{static_cast<double>(dx), static_cast<double>(dy)};
      std::map<int, double> hist;
      for (const EdgeVote& v : votes) {
        const double r = (v.pos - c).norm();
        if (r < r_lo || r > r_hi) continue;
        hist[static_cast<int>(std::round(r / 2.0))] += v.weight;
      }
      for (const auto& [bin, w] : hist)
        if (w > best_votes) {
          best_votes = w;
          best_c = c;
          best_r = 2.0 * bin;
        }
    }

  // Weighted algebraic circle fit over the Hough inliers.
  auto fit_once = [&](const Vec2& c0, double r0, double band, Vec2* c_out, double* r_out) {
    double sw = 0, sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0, sz = 0, sxz = 0, syz = 0;
    for (const EdgeVote& v : votes) {
      if (std::abs((v.pos - c0).norm() - r0) > band) continue;
      const double x = v.pos.x, y = v.pos.y, z = x * x + y * y, w = v.weight;
      sw += w;
      sx += w * x;
      sy += w * y;
      sxx += w * x * x;
      syy += w * y * y;
      sxy += w * x * y;
      sz += w * z;
      sxz += w * x * z;
      syz += w * y * z;
    }
    if (sw <= 1e-12) return false;
    // Solve [sxx sxy sx; sxy syy sy; sx sy sw] [D E F]^T = -[sxz; syz; sz]
    double m[3][4] = {{sxx, sxy, sx, -sxz}, {sxy, syy, sy, -syz}, {sx, sy, sw, -sz}};
    for (int col = 0; col < 3; ++col) {
      int piv = col;
      for (int r = col + 1; r < 3; ++r)
        if (std::abs(m[r][col]) > std::abs(m[piv][col])) piv = r;
      if (std::abs(m[piv][col]) < 1e-12) return false;
      std::swap(m[col], m[piv]);
      for (int r = 0; r < 3; ++r) {
        if (r == col) continue;
        const double f = m[r][col] / m[col][col];
        for (int cc = col; cc < 4; ++cc) m[r][cc] -= f * m[col][cc];
      }
    }
    const double D = m[0][3] / m[0][0], E = m[1][3] / m[1][1], F = m[2][3] / m[2][2];
    const double r2 = 0.25 * (D * D + E * E) - F;
    if (r2 <= 0.0) return false;
    *c_out = Vec2{-0.5 * D, -0.5 * E};
    *r_out = std::sqrt(r2);
    return true;
  };

  Vec2 c_fit = best_c;
  double r_fit = best_r;
  fit_once(best_c, best_r, 4.0, &c_fit, &r_fit);
  fit_once(c_fit, r_fit, 2.5, &c_fit, &r_fit);

  double inlier_weight = 0.0;
  for (const EdgeVote& v : votes)
    if (std::abs((v.pos - c_fit).norm() - r_fit) <= 2.5) inlier_weight += v.weight;

  disk.center = c_fit;
  disk.radius = r_fit;
  disk.confidence = inlier_weight / total_weight;
  return disk;
}

// ---------------------------------------------------------------- likelihood

Image2D vessel_likelihood(const OrientationScore& score) {
  Image2D out(score.width, score.height);
  for (size_t b = 0; b < out.data.size(); ++b) {
    double m = -1e300;
    for (int i = 0; i < score.n_orient; ++i) m = std::max(m, -score.layers[i][b].real());
    out.data[b] = m;
  }
  return out;
}

// ---------------------------------------------------------------- seeds

std::vector<Seed> detect_seeds(const Image2D& likelihood, const OrientationScore& score,
                               const OpticDisk& disk, const VasculatureParams& p) {
  const double avg_w = avg_caliber(disk.radius);
  const int n = std::max(8, static_cast<int>(std::round(360.0 / p.seed_step_deg)));
  std::vector<Seed> out;
  for (double factor : {1.0, 1.5}) {
    const double r = disk.radius * factor;
    std::vector<double> val(n, -1e300);
    std::vector<Vec2> pos(n);
    double mean = 0.0;
    int n_valid = 0;
    for (int i = 0; i < n; ++i) {
      const double a = kTwoPi * i / n;
      pos[i] = disk.center + Vec2{r * std::cos(a), r * std::sin(a)};
      if (!likelihood.in_grid(pos[i].x, pos[i].y)) continue;
      val[i] = likelihood.sample(pos[i].x, pos[i].y);
      mean += val[i];
      ++n_valid;
    }
    if (n_valid == 0) continue;
    mean /= n_valid;
    for (int i = 0; i < n; ++i) {
      const int im = (i + n - 1) % n, ip = (i + 1) % n;
      if (val[i] <= -1e300 || val[im] <= -1e300 || val[ip] <= -1e300) continue;
      if (!(val[i] > val[im] && val[i] > val[ip] && val[i] > mean)) continue;

      // Orientation from the highest score modulus, pointed away from the disk.
      const std::vector<double> col = score.orientation_column_abs(pos[i].x, pos[i].y);
      int best = 0;
      for (int j = 1; j < score.n_orient; ++j)
        if (col[j] > col[best]) best = j;
      const double s_theta = kTwoPi / score.n_orient;
      const double om = col[(best + score.n_orient - 1) % score.n_orient];
      const double op = col[(best + 1) % score.n_orient];
      const double denom = om - 2.0 * col[best] + op;
      double theta = best * s_theta;
      if (std::abs(denom) > 1e-300)
        theta += s_theta * std::clamp(0.5 * (om - op) / denom, -0.5, 0.5);
      const Vec2 outward = pos[i] - disk.center;
      if (frame_xi(theta).dot(outward) < 0.0) theta += kPi;
      theta = wrap_two_pi(theta);

      bool dup = false;
      for (const Seed& s : out)
        if ((s.c0 - pos[i]).norm() < avg_w &&
            orient_dist(s.theta0, theta) < p.seed_merge_angle_deg * kPi / 180.0)
          dup = true;
      if (dup) continue;
      Seed s;
      s.c0 = pos[i];
      s.theta0 = theta;
      out.push_back(s);
    }
  }
  return out;
}

// ---------------------------------------------------------------- vessel value

double vessel_value(const OrientationScore& score, const Vec2& u, const Vec2& v, double theta) {
  if ((u - v).norm() <= 0.0) throw Error(ErrorCode::ParamError, "degenerate chord");
  const int n = 32;
  double acc = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double t = static_cast<double>(i) / n;
    const Vec2 p = u + (v - u) * t;
    const auto s = score.try_sample(p.x, p.y, theta);
    const double a = s ? std::abs(*s) : 0.0;
    acc += (i == 0 || i == n) ? 0.5 * a : a;
  }
  return acc / n;
}

// ---------------------------------------------------------------- init edges

std::optional<InitialEdges> initial_edges(const OrientationScore& score, const Vec2& c0,
                                          double theta0, double avg_width) {
  if (avg_width <= 0.0) throw Error(ErrorCode::ParamError, "average width must be positive");
  const double eta_max = std::max(20.0, 3.0 * avg_width);
  const Vec2 dir = frame_eta(theta0);
  const int half = static_cast<int>(std::round(eta_max / 0.5));
  const int m = 2 * half + 1;
  std::vector<double> im_profile(m, 0.0);
  std::vector<uint8_t> valid(m, 0);
  for (int i = 0; i < m; ++i) {
    const double eta = 0.5 * (i - half);
    const Vec2 p = c0 + dir * eta;
    const auto s = score.try_sample(p.x, p.y, theta0);
    if (s) {
      im_profile[i] = s->imag();
      valid[i] = 1;
    }
  }
  auto eta_of = [&](double idx) { return 0.5 * (idx - half); };

  // Candidate edges: strict grid extrema of Im on valid samples.
  struct Cand {
    int idx;
    double value;
    bool is_max;
  };
  std::vector<Cand> cands;
  for (int i = 1; i + 1 < m; ++i) {
    if (!valid[i - 1] || !valid[i] || !valid[i + 1]) continue;
    if (im_profile[i] > im_profile[i - 1] && im_profile[i] > im_profile[i + 1])
      cands.push_back({i, im_profile[i], true});
    else if (im_profile[i] < im_profile[i - 1] && im_profile[i] < im_profile[i + 1])
      cands.push_back({i, im_profile[i], false});
  }

  // Best opposite-sign pair (min before max); exp factor recenters on c0.
  const double sigma_c = 0.5 * avg_width;
  double best_s = -1e300;
  int best_i = -1, best_j = -1;
  for (size_t a = 0; a < cands.size(); ++a) {
    if (cands[a].is_max || cands[a].value >= 0.0) continue;
    for (size_t b = a + 1; b < cands.size(); ++b) {
      if (!cands[b].is_max || cands[b].value <= 0.0) continue;
      const Vec2 u = c0 + dir * eta_of(cands[a].idx);
      const Vec2 v = c0 + dir * eta_of(cands[b].idx);
      const double mid = 0.5 * (eta_of(cands[a].idx) + eta_of(cands[b].idx));
      const double s =
          vessel_value(score, u, v, theta0) * std::exp(-0.5 * mid * mid / (sigma_c * sigma_c));
      if (s > best_s + 1e-15 ||
          (std::abs(s - best_s) <= 1e-15 && best_i >= 0 &&
           std::abs(mid) < std::abs(0.5 * (eta_of(best_i) + eta_of(best_j))))) {
        best_s = s;
        best_i = cands[a].idx;
        best_j = cands[b].idx;
      }
    }
  }
  if (best_i < 0) return std::nullopt;

  // Merge neighbouring patches whose gap to the group is under the main
  // patch width, then trace every candidate to the first toppoint scale.
  double group_lo = eta_of(best_i), group_hi = eta_of(best_j);
  const double main_width = group_hi - group_lo;
  bool grew = true;
  while (grew) {
    grew = false;
    for (const Cand& c : cands) {
      const double e = eta_of(c.idx);
      if (e >= group_lo && e <= group_hi) continue;
      const double gap = e < group_lo ? group_lo - e : e - group_hi;
      if (gap < main_width) {
        group_lo = std::min(group_lo, e);
        group_hi = std::max(group_hi, e);
        grew = true;
      }
    }
  }

  ScaleLadder ladder;
  ladder.levels = 12;
  const ScaleTracks tracks = toppoints_1d(scale_space_1d(im_profile, ladder));
  double t_star = 1e300;
  for (const ExtremumTrack& t : tracks.tracks) {
    const double e = eta_of(t.seed.pos);
    if (e < group_lo - 0.25 || e > group_hi + 0.25) continue;
    if (!t.persisted) t_star = std::min(t_star, t.death_scale);
  }
  double e_left = 1e300, e_right = -1e300;
  double v_left = 0.0, v_right = 0.0;
  for (const ExtremumTrack& t : tracks.tracks) {
    const double e = eta_of(t.seed.pos);
    if (e < group_lo - 0.25 || e > group_hi + 0.25) continue;
    if (!t.persisted && t.death_scale <= t_star) continue;  // died at/before t*
    if (!t.seed.is_max && e < e_left) {
      e_left = e;
      v_left = t.seed.value;
    }
    if (t.seed.is_max && e > e_right) {
      e_right = e;
      v_right = t.seed.value;
    }
  }
  if (e_left >= e_right || v_left >= 0.0 || v_right <= 0.0) {
    // Fall back to the winning pair itself (its extrema may be the ones
    // that annihilate at t*).
    e_left = eta_of(best_i);
    e_right = eta_of(best_j);
  }

  InitialEdges out;
  out.u0 = c0 + dir * e_left;
  out.v0 = c0 + dir * e_right;
  out.width = e_right - e_left;
  out.nu = vessel_value(score, out.u0, out.v0, theta0);
  return out;
}

double seed_threshold(const std::vector<double>& seed_values) {
  if (seed_values.empty()) throw Error(ErrorCode::NoSeeds, "no initialized seeds");
  return 0.5 * std::accumulate(seed_values.begin(), seed_values.end(), 0.0) /
         static_cast<double>(seed_values.size());
}

// ---------------------------------------------------------------- pixel map

namespace {

double tri_side(const Vec2& a, const Vec2& b, const Vec2& p) {
  return (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
}

bool in_triangle(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& p) {
  const double d1 = tri_side(a, b, p), d2 = tri_side(b, c, p), d3 = tri_side(c, a, p);
  const bool neg = d1 < -1e-12 || d2 < -1e-12 || d3 < -1e-12;
  const bool pos = d1 > 1e-12 || d2 > 1e-12 || d3 > 1e-12;
  return !(neg && pos);
}

}  // namespace

void PixelMap::paint_quad(const TrackPoint& a, const TrackPoint& b, int id) {
  const Vec2 corners[4] = {a.u, a.v, b.v, b.u};
  double lox = corners[0].x, hix = corners[0].x, loy = corners[0].y, hiy = corners[0].y;
  for (const Vec2& c : corners) {
    lox = std::min(lox, c.x);
    hix = std::max(hix, c.x);
    loy = std::min(loy, c.y);
    hiy = std::max(hiy, c.y);
  }
  const int x0 = std::max(0, static_cast<int>(std::floor(lox)));
  const int x1 = std::min(width - 1, static_cast<int>(std::ceil(hix)));
  const int y0 = std::max(0, static_cast<int>(std::floor(loy)));
  const int y1 = std::min(height - 1, static_cast<int>(std::ceil(hiy)));
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) {
      const Vec2 p{static_cast<double>(x), static_cast<double>(y)};
      if (!in_triangle(corners[0], corners[1], corners[2], p) &&
          !in_triangle(corners[0], corners[2], corners[3], p))
        continue;
      int& cell = owner[static_cast<size_t>(y) * width + x];
      if (cell < 0) cell = id;  // first owner wins
    }
}

// ---------------------------------------------------------------- stop policy

ModelStopPolicy::ModelStopPolicy(const OrientationScore& score, const Image2D& mask_source,
                                 const PixelMap& map, int self_id, double t_nu,
                                 double avg_width, double lambda)
    : score_(score),
      mask_source_(mask_source),
      map_(map),
      self_id_(self_id),
      t_nu_(t_nu),
      run_limit_(static_cast<int>(std::ceil(4.0 * avg_width / lambda))) {}

StopReason ModelStopPolicy::check(const TrackPoint& point, const TrackState& state) {
  (void)state;
  // Criterion 1: region of interest.
  if (!mask_source_.in_mask(point.c.x, point.c.y)) return StopReason::Boundary;
  // Criterion 2: sustained overlap with other segments.
  const int xi = static_cast<int>(std::lround(point.c.x));
  const int yi = static_cast<int>(std::lround(point.c.y));
  const int owner = map_.inside(xi, yi) ? map_.at(xi, yi) : -1;
  if (owner >= 0 && owner != self_id_) {
    if (run_ == 0) {
      event_.host_segment = owner;
      event_.at = point;
    }
    if (++run_ >= run_limit_) {
      event_.fired = true;
      return StopReason::Overlap;
    }
  } else {
    run_ = 0;
  }
  // Criterion 3: vessel value under threshold (inclusive survival).
  if (vessel_value(score_, point.u, point.v, point.theta) < t_nu_)
    return StopReason::LowVesselValue;
  return StopReason::None;
}

// ---------------------------------------------------------------- junctions

std::vector<JunctionCandidate> detect_junction_candidates(const OrientationScore& plus_score,
                                                          const VesselSegment& segment,
                                                          double prominence_ratio,
                                                          double avg_width) {
  std::vector<JunctionCandidate> out;
  const int n = plus_score.n_orient;
  const double s_theta = kTwoPi / n;
  const int npts = static_cast<int>(segment.points.size());
  // Track ends carry structure that is not a junction: seeds sit against the
  // optic disk, children start inside their parent vessel, and termini stop
  // against whatever killed them. Skip two calibers from both ends (at least
  // the 3 outermost points); overlaps there are the resolver's job.
  std::vector<double> arc(static_cast<size_t>(std::max(npts, 1)), 0.0);
  for (int k = 1; k < npts; ++k)
    arc[k] = arc[k - 1] + (segment.points[k].c - segment.points[k - 1].c).norm();
  const double margin = 2.0 * avg_width;
  int lo = 3, hi = npts - 4;
  while (lo < npts && arc[lo] < margin) ++lo;
  while (hi >= 0 && arc[npts - 1] - arc[hi] < margin) --hi;
  for (int k = lo; k <= hi; ++k) {
    const TrackPoint& pt = segment.points[k];
    for (int side : {-1, +1}) {
      const Vec2 e = side < 0 ? pt.u : pt.v;
      std::vector<double> col(n, 0.0);
      bool ok = true;
      for (int i = 0; i < n && ok; ++i) {
        const auto s = plus_score.try_sample(e.x, e.y, i * s_theta);
        if (!s)
          ok = false;
        else
          col[i] = std::abs(*s);
      }
      if (!ok) continue;

      std::vector<int> maxima;
      for (int i = 0; i < n; ++i)
        if (col[i] > col[(i + n - 1) % n] && col[i] > col[(i + 1) % n]) maxima.push_back(i);
      if (maxima.size() < 3) continue;  // need both lobes plus an extra

      // Along-vessel lobes at theta_k and theta_k + pi.
      int lobe_f = -1, lobe_b = -1;
      double df = 1e300, db = 1e300;
      for (int mi : maxima) {
        const double a = mi * s_theta;
        const double ddf = circ_dist(a, pt.theta);
        const double ddb = circ_dist(a, pt.theta + kPi);
        if (ddf < df) {
          df = ddf;
          lobe_f = mi;
        }
        if (ddb < db) {
          db = ddb;
          lobe_b = mi;
        }
      }
      if (lobe_f < 0 || lobe_b < 0 || lobe_f == lobe_b) continue;
      const double lobe_height = std::max(col[lobe_f], col[lobe_b]);

      for (int mi : maxima) {
        if (mi == lobe_f || mi == lobe_b) continue;
        const int d_f = std::min((mi - lobe_f + n) % n, (lobe_f - mi + n) % n);
        const int d_b = std::min((mi - lobe_b + n) % n, (lobe_b - mi + n) % n);
        if (d_f <= 1 || d_b <= 1) continue;  // lobe shoulders
        const double phi = mi * s_theta;
        // Branches on the u side leave toward -e_eta, on the v side toward
        // +e_eta: sign of sin(phi - theta) selects the arc.
        const double s_side = std::sin(wrap_pi(phi - pt.theta));
        if (side < 0 ? s_side >= 0.0 : s_side <= 0.0) continue;
        if (col[mi] < prominence_ratio * lobe_height) continue;
        const double om = col[(mi + n - 1) % n], op = col[(mi + 1) % n];
        const double denom = om - 2.0 * col[mi] + op;
        double refined = phi;
        if (std::abs(denom) > 1e-300)
          refined += s_theta * std::clamp(0.5 * (om - op) / denom, -0.5, 0.5);
        JunctionCandidate cand;
        cand.position = e;
        cand.orientation = wrap_two_pi(refined);
        cand.side = side;
        cand.segment_id = segment.id;
        out.push_back(cand);
      }
    }
  }
  return out;
}

std::vector<JunctionDraft> cluster_junctions(const std::vector<JunctionCandidate>& candidates,
                                             double avg_width) {
  std::vector<JunctionDraft> drafts;
  const int n = static_cast<int>(candidates.size());
  if (n == 0) return drafts;
  // Single-linkage via union-find.
  std::vector<int> root(n);
  std::iota(root.begin(), root.end(), 0);
  std::function<int(int)> find = [&](int a) { return root[a] == a ? a : root[a] = find(root[a]); };
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b)
      if ((candidates[a].position - candidates[b].position).norm() < avg_width)
        root[find(a)] = find(b);

  std::map<int, std::vector<int>> clusters;
  for (int a = 0; a < n; ++a) clusters[find(a)].push_back(a);

  const int bins = 18;
  const double bin_w = kPi / bins;
  for (const auto& [key, members] : clusters) {
    int hist[18] = {0};
    for (int idx : members) {
      const double a = wrap_two_pi(candidates[idx].orientation);
      hist[static_cast<int>(std::fmod(a, kPi) / bin_w) % bins] += 1;
    }
    for (int b = 0; b < bins; ++b) {
      const int prev = hist[(b + bins - 1) % bins], next = hist[(b + 1) % bins];
      if (hist[b] == 0 || !(hist[b] > prev && hist[b] >= next)) continue;
      // Members within one bin of the mode (orientations mod pi).
      const double mode_angle = (b + 0.5) * bin_w;
      Vec2 mean_pos{0.0, 0.0};
      double cx = 0.0, sx = 0.0;
      int count = 0;
      std::map<int, int> id_votes;
      for (int idx : members) {
        const double a = std::fmod(wrap_two_pi(candidates[idx].orientation), kPi);
        if (orient_dist(a, mode_angle) > 1.5 * bin_w) continue;
        mean_pos = mean_pos + candidates[idx].position;
        cx += std::cos(2.0 * a);
        sx += std::sin(2.0 * a);
        id_votes[candidates[idx].segment_id] += 1;
        ++count;
      }
      if (count == 0) continue;
      JunctionDraft d;
      d.position = mean_pos * (1.0 / count);
      d.orientation = 0.5 * std::atan2(sx, cx);
      if (d.orientation < 0.0) d.orientation += kPi;
      int host = -1, host_votes = -1;
      for (const auto& [id, v] : id_votes)
        if (v > host_votes) {
          host_votes = v;
          host = id;
        }
      d.host_segment = host;
      d.support = count;
      drafts.push_back(d);
    }
  }
  std::sort(drafts.begin(), drafts.end(), [](const JunctionDraft& a, const JunctionDraft& b) {
    if (a.position.x != b.position.x) return a.position.x > b.position.x;
    if (a.position.y != b.position.y) return a.position.y < b.position.y;
    return a.orientation < b.orientation;
  });
  return drafts;
}

namespace {

// Sub-Riemannian cost of the chord-frame cubic between two oriented points.
double connection_cost(const Vec2& p1, double phi1, const Vec2& p2, double phi2, double beta) {
  const Vec2 d = p2 - p1;
  const double dist = d.norm();
  if (dist < 1e-9) return 1e300;
  const double alpha = std::atan2(d.y, d.x);
  auto slope = [&](double phi) {
    double rel = wrap_pi(phi - alpha);
    if (rel > kPi / 2) rel -= kPi;  // orientations are mod pi here
    if (rel < -kPi / 2) rel += kPi;
    if (std::abs(rel) > 80.0 * kPi / 180.0) return 1e300;
    return std::tan(rel);
  };
  const double s1 = slope(phi1), s2 = slope(phi2);
  if (s1 >= 1e300 || s2 >= 1e300) return 1e300;
  const LiftedCurve cubic = cubic_hermite(Se2{0.0, 0.0, s1}, Se2{dist, 0.0, s2}, 65);
  return sr_length(cubic, beta);
}

}  // namespace

JunctionKind classify_junction(const std::vector<JunctionDraft>& drafts, size_t index,
                               const std::vector<double>& draft_widths, double avg_width,
                               const VasculatureParams& p, int* partner) {
  if (partner) *partner = -1;
  const JunctionDraft& self = drafts[index];
  const double beta = 1.0 / avg_width;
  double best_cost = 1e300;
  int best = -1;
  for (size_t j = 0; j < drafts.size(); ++j) {
    if (j == index) continue;
    const double dist = (drafts[j].position - self.position).norm();
    if (dist > 3.0 * avg_width || dist < 1e-9) continue;
    if (index < draft_widths.size() && j < draft_widths.size() && draft_widths[index] > 0.0 &&
        draft_widths[j] > 0.0) {
      const double wmax = std::max(draft_widths[index], draft_widths[j]);
      if (std::abs(draft_widths[index] - draft_widths[j]) > p.width_gate * wmax) continue;
    }
    const double cost = connection_cost(self.position, self.orientation, drafts[j].position,
                                        drafts[j].orientation, beta);
    if (cost < p.sr_cost_ratio * beta * dist && cost < best_cost) {
      best_cost = cost;
      best = static_cast<int>(j);
    }
  }
  if (best >= 0) {
    if (partner) *partner = best;
    return JunctionKind::Crossing;
  }
  return JunctionKind::Bifurcation;
}

OverlapResolution classify_overlap(const TrackPoint& incoming, const TrackPoint& established,
                                   const VasculatureParams& p) {
  const double dt = orient_dist(incoming.theta, established.theta);
  const double wmax = std::max(incoming.width, established.width);
  const bool widths_ok =
      wmax > 0.0 && std::abs(incoming.width - established.width) <= p.width_gate * wmax;
  if (dt <= p.dup_angle_deg * kPi / 180.0 && widths_ok) return OverlapResolution::DuplicateDropped;
  if (dt > p.cross_angle_deg * kPi / 180.0 && widths_ok)
    return OverlapResolution::CrossingContinued;
  return OverlapResolution::BifurcationTerminated;
}

// ---------------------------------------------------------------- pipeline

namespace {

struct QueuedSeed {
  TrackPoint init;
  std::optional<int> parent;
  // When >= 0, this seed came from a junction already registered at the
  // given index; its segment id is appended there after tracking.
  int junction_index = -1;
};

int nearest_point_index(const VesselSegment& seg, const Vec2& p) {
  int best = 0;
  double bd = 1e300;
  for (size_t i = 0; i < seg.points.size(); ++i) {
    const double d = (seg.points[i].c - p).norm();
    if (d < bd) {
      bd = d;
      best = static_cast<int>(i);
    }
  }
  return best;
}

}  // namespace

VasculatureModel build_vasculature(const Image2D& intensity, const Image2D& red,
                                   const VasculatureParams& p,
                                   const std::vector<Seed>* seed_override) {
  p.validate();
  if (intensity.width % 2 != 0 || intensity.height % 2 != 0)
    throw Error(ErrorCode::DimError, "even image dimensions required");

  VasculatureModel model;
  model.params = p;

  // Scores: DC-removed cake, double-sided for values, single-sided for
  // tracking and junction columns.
  PreprocessParams pp;
  const Image2D prepped = preprocess(intensity, pp);
  CakeParams ck;
  ck.n_orient = p.n_orient;
  ck.dc_removed = true;
  const WaveletStack stack = build_cake_stack(intensity.width, intensity.height, ck);
  const WaveletStack stack_plus = split_directional(stack, Sidedness::Plus);
  const OrientationScore u_both = transform(prepped, stack);
  const OrientationScore u_plus = transform(prepped, stack_plus);

  model.disk = detect_optic_disk(intensity, red, p.expected_disk_radius);
  if (!seed_override && model.disk.confidence < p.disk_confidence_min)
    throw Error(ErrorCode::Reject, "low-confidence optic disk; supply seeds explicitly");
  const double avg_w = avg_caliber(model.disk.radius);
  model.avg_width = avg_w;

  std::vector<Seed> seeds;
  if (seed_override) {
    seeds = *seed_override;
  } else {
    const Image2D likelihood = vessel_likelihood(u_both);
    seeds = detect_seeds(likelihood, u_both, model.disk, p);
  }

  // Initialize seeds; T_nu from the initialized vessel values.
  std::deque<QueuedSeed> queue;
  std::vector<double> nus;
  std::vector<QueuedSeed> pending;
  for (const Seed& s : seeds) {
    const auto init = initial_edges(u_both, s.c0, s.theta0, avg_w);
    if (!init) continue;
    QueuedSeed q;
    q.init = TrackPoint::from_edges(init->u0, init->v0, s.theta0);
    q.parent = s.parent_id;
    pending.push_back(q);
    nus.push_back(init->nu);
  }
  if (pending.empty()) throw Error(ErrorCode::NoSeeds, "no seed survived initialization");
  model.t_nu = seed_threshold(nus);
  for (size_t i = 0; i < pending.size(); ++i)
    if (nus[i] >= model.t_nu) queue.push_back(pending[i]);
  if (queue.empty()) throw Error(ErrorCode::NoSeeds, "no seed above the vessel-value threshold");

  model.pixel_map = PixelMap(intensity.width, intensity.height);

  auto paint_segment = [&](const VesselSegment& seg) {
    for (size_t i = 1; i < seg.points.size(); ++i)
      model.pixel_map.paint_quad(seg.points[i - 1], seg.points[i], seg.id);
  };

  auto queue_child = [&](const Vec2& pos, double theta, int parent, int junction_index) {
    const auto init = initial_edges(u_both, pos, theta, avg_w);
    if (!init) return false;
    if (init->nu < model.t_nu) return false;
    QueuedSeed q;
    q.init = TrackPoint::from_edges(init->u0, init->v0, theta);
    q.parent = parent;
    q.junction_index = junction_index;
    queue.push_back(q);
    return true;
  };

  while (!queue.empty() && static_cast<int>(model.segments.size()) < p.max_segments) {
    const QueuedSeed q = queue.front();
    queue.pop_front();
    const int id = static_cast<int>(model.segments.size());

    ModelStopPolicy policy(u_both, prepped, model.pixel_map, id, model.t_nu, avg_w,
                           p.etos.lambda);
    VesselSegment seg;
    try {
      seg = etos_track(u_plus, q.init, p.etos, &policy);
    } catch (const Error& e) {
      if (e.code == ErrorCode::SeedError) continue;
      throw;
    }
    seg.id = id;
    seg.parent_id = q.parent;

    bool keep = true;
    bool collect_candidates = true;
    int own_junction = -1;  // junction created by this segment's own overlap
    if (seg.stop == StopReason::Overlap && policy.event().fired) {
      const OverlapEvent& ev = policy.event();
      VesselSegment& host = model.segments[ev.host_segment];
      const TrackPoint& host_pt = host.points[nearest_point_index(host, ev.at.c)];
      const OverlapResolution res = classify_overlap(ev.at, host_pt, p);

      // The trailing run rode the established segment; drop it.
      const int trim = std::min<int>(policy.overlap_run_limit(),
                                     static_cast<int>(seg.points.size()) - 1);
      seg.points.resize(seg.points.size() - trim);
      keep = seg.points.size() >= 3;

      if (res == OverlapResolution::DuplicateDropped) {
        collect_candidates = false;  // a duplicate has nothing new to offer
      } else if (res == OverlapResolution::CrossingContinued) {
        Junction j;
        j.position = host_pt.c;
        j.orientation = ev.at.theta;
        j.kind = JunctionKind::Crossing;
        j.segment_ids = {ev.host_segment};
        model.junctions.push_back(j);
        own_junction = static_cast<int>(model.junctions.size()) - 1;
        // Re-seed past the established vessel, continuing this track.
        const Vec2 far = host_pt.c +
                         frame_xi(ev.at.theta) *
                             (0.5 * host_pt.width + 0.5 * ev.at.width + p.etos.lambda);
        queue_child(far, ev.at.theta, keep ? id : ev.host_segment, own_junction);
      } else {
        Junction j;
        j.position = host_pt.c;
        j.orientation = ev.at.theta;
        j.kind = JunctionKind::Bifurcation;
        j.segment_ids = {ev.host_segment};
        model.junctions.push_back(j);
        own_junction = static_cast<int>(model.junctions.size()) - 1;
      }
    }
    if (!keep) continue;
    model.segments.push_back(seg);
    paint_segment(seg);
    if (q.junction_index >= 0)
      model.junctions[q.junction_index].segment_ids.push_back(id);
    if (own_junction >= 0) model.junctions[own_junction].segment_ids.push_back(id);

    if (!collect_candidates) continue;
    const std::vector<JunctionCandidate> cands =
        detect_junction_candidates(u_plus, model.segments.back(), p.junction_prominence, avg_w);
    std::vector<JunctionDraft> drafts = cluster_junctions(cands, avg_w);

    // Validate drafts (initial_edges + T_nu) and drop re-discoveries.
    std::vector<JunctionDraft> live;
    std::vector<double> widths;
    std::vector<TrackPoint> inits;
    for (const JunctionDraft& d : drafts) {
      bool known = false;
      for (const Junction& j : model.junctions)
        if ((j.position - d.position).norm() < 2.0 * avg_w &&
            orient_dist(j.orientation, d.orientation) < 30.0 * kPi / 180.0)
          known = true;
      if (known) continue;
      // Outward direction: away from the host centerline.
      double theta = d.orientation;
      const VesselSegment& host = model.segments.back();
      const TrackPoint& near = host.points[nearest_point_index(host, d.position)];
      if (frame_xi(theta).dot(d.position - near.c) < 0.0) theta = wrap_two_pi(theta + kPi);
      const auto init = initial_edges(u_both, d.position, theta, avg_w);
      if (!init || init->nu < model.t_nu) continue;
      JunctionDraft keep_draft = d;
      keep_draft.orientation = theta;
      live.push_back(keep_draft);
      widths.push_back(init->width);
      inits.push_back(TrackPoint::from_edges(init->u0, init->v0, theta));
    }

    std::vector<char> consumed(live.size(), 0);
    for (size_t i = 0; i < live.size(); ++i) {
      if (consumed[i]) continue;
      int partner = -1;
      const JunctionKind kind = classify_junction(live, i, widths, avg_w, p, &partner);
      if (kind == JunctionKind::Crossing && partner >= 0 && !consumed[partner]) {
        consumed[i] = consumed[partner] = 1;
        Junction j;
        j.position = (live[i].position + live[partner].position) * 0.5;
        j.orientation = live[i].orientation;
        j.kind = JunctionKind::Crossing;
        j.segment_ids = {live[i].host_segment};
        model.junctions.push_back(j);
        const int jidx = static_cast<int>(model.junctions.size()) - 1;
        queue_child(live[i].position, live[i].orientation, live[i].host_segment, jidx);
        queue_child(live[partner].position, live[partner].orientation,
                    live[partner].host_segment, jidx);
      } else {
        consumed[i] = 1;
        Junction j;
        j.position = live[i].position;
        j.orientation = live[i].orientation;
        j.kind = JunctionKind::Bifurcation;
        j.segment_ids = {live[i].host_segment};
        model.junctions.push_back(j);
        const int jidx = static_cast<int>(model.junctions.size()) - 1;
        if (!queue_child(live[i].position, live[i].orientation, live[i].host_segment, jidx))
          model.junctions.pop_back();  // nothing grew out of it
      }
    }
  }

  // A junction is only real once at least two accepted segments meet there;
  // drafts whose children were rejected mid-queue reduce to a single id.
  std::erase_if(model.junctions,
                [](const Junction& j) { return j.segment_ids.size() < 2; });

  return model;
}

// ---------------------------------------------------------------- features

namespace {

double circum_curv(const Vec2& p0, const Vec2& p1, const Vec2& p2) {
  const Vec2 a = p1 - p0, b = p2 - p1, c = p2 - p0;
  const double cross = a.x * b.y - a.y * b.x;
  const double den = a.norm() * b.norm() * c.norm();
  if (den < 1e-300) return 0.0;
  return 2.0 * std::abs(cross) / den;
}

}  // namespace

FeatureTables model_features(const VasculatureModel& model) {
  FeatureTables t;
  t.point_distances.resize(model.segments.size());
  for (const Junction& j : model.junctions) {
    if (j.kind == JunctionKind::Bifurcation)
      ++t.n_bifurcations;
    else
      ++t.n_crossings;
  }
  for (size_t si = 0; si < model.segments.size(); ++si) {
    const VesselSegment& seg = model.segments[si];
    SegmentFeature f;
    f.id = seg.id;
    double len = 0.0, wsum = 0.0, csum = 0.0;
    for (size_t i = 1; i < seg.points.size(); ++i)
      len += (seg.points[i].c - seg.points[i - 1].c).norm();
    for (const TrackPoint& pt : seg.points) wsum += pt.width;
    int ctri = 0;
    for (size_t i = 1; i + 1 < seg.points.size(); ++i, ++ctri)
      csum += circum_curv(seg.points[i - 1].c, seg.points[i].c, seg.points[i + 1].c);
    f.length = len;
    f.mean_width = seg.points.empty() ? 0.0 : wsum / static_cast<double>(seg.points.size());
    f.mean_curvature = ctri > 0 ? csum / ctri : 0.0;

    // Distance to the disk boundary along the tree.
    double start = 0.0;
    if (seg.parent_id && *seg.parent_id >= 0 &&
        static_cast<size_t>(*seg.parent_id) < model.segments.size() &&
        !t.point_distances[*seg.parent_id].empty()) {
      const VesselSegment& par = model.segments[*seg.parent_id];
      const int ni = nearest_point_index(par, seg.points.front().c);
      start = t.point_distances[*seg.parent_id][ni] +
              (par.points[ni].c - seg.points.front().c).norm();
    } else {
      start = std::max(0.0, (seg.points.front().c - model.disk.center).norm() -
                                model.disk.radius);
    }
    std::vector<double>& dist = t.point_distances[si];
    dist.resize(seg.points.size());
    double acc = start;
    for (size_t i = 0; i < seg.points.size(); ++i) {
      if (i > 0) acc += (seg.points[i].c - seg.points[i - 1].c).norm();
      dist[i] = acc;
    }
    f.max_disk_distance = dist.empty() ? 0.0 : dist.back();
    t.segments.push_back(f);
  }
  return t;
}

}  // namespace orientrace
