#include "orientrace/completion.hpp"

#include <algorithm>
#include <cmath>

namespace orientrace {

void CompletionSetup::validate() const {
  if (!(g2.x > g1.x)) throw Error(ErrorCode::ParamError, "sink must lie at larger x");
  if (lambda_res <= 0.0 || d11 <= 0.0 || beta <= 0.0)
    throw Error(ErrorCode::ParamError, "rates must be positive");
}

double heisenberg_green(double x, double y, double theta, double lambda_res, double d11) {
  if (lambda_res <= 0.0 || d11 <= 0.0)
    throw Error(ErrorCode::ParamError, "rates must be positive");
  if (x <= 0.0) return 0.0;
  const double q = 3.0 * (x * theta - 2.0 * y) * (x * theta - 2.0 * y) + x * x * theta * theta;
  return lambda_res * std::sqrt(3.0) / (2.0 * d11 * kPi * x * x) * std::exp(-lambda_res * x) *
         std::exp(-q / (4.0 * x * x * x * d11));
}

namespace {

// Heisenberg left translation g1^-1 g and the sink inversion iota(g2^-1 g).
struct GreenArgs {
  double a, b, t;
};

GreenArgs source_args(const Se2& g1, double x, double y, double theta) {
  const double a = x - g1.x;
  return {a, y - g1.y - g1.theta * a, theta - g1.theta};
}

GreenArgs sink_args(const Se2& g2, double x, double y, double theta) {
  const double a = x - g2.x;  // negative inside the span
  return {-a, y - g2.y - g2.theta * a, g2.theta - theta};
}

}  // namespace

CompletionField completion_field_h3(const CompletionSetup& setup, const FieldGrid& grid) {
  setup.validate();
  if (grid.nx < 2 || grid.ny < 2 || grid.ntheta < 2)
    throw Error(ErrorCode::ParamError, "field grid too small");
  CompletionField f;
  f.grid = grid;
  f.xs.resize(grid.nx);
  f.ys.resize(grid.ny);
  f.thetas.resize(grid.ntheta);
  // Open interval in x: the Green's prefactor is singular at the endpoints.
  for (int i = 0; i < grid.nx; ++i)
    f.xs[i] = setup.g1.x + (setup.g2.x - setup.g1.x) * (i + 1.0) / (grid.nx + 1.0);
  for (int i = 0; i < grid.ny; ++i)
    f.ys[i] = grid.y_min + (grid.y_max - grid.y_min) * i / (grid.ny - 1.0);
  for (int i = 0; i < grid.ntheta; ++i)
    f.thetas[i] = grid.theta_min + (grid.theta_max - grid.theta_min) * i / (grid.ntheta - 1.0);

  f.values.resize(static_cast<size_t>(grid.nx) * grid.ny * grid.ntheta);
  size_t idx = 0;
  for (int ix = 0; ix < grid.nx; ++ix)
    for (int iy = 0; iy < grid.ny; ++iy)
      for (int it = 0; it < grid.ntheta; ++it, ++idx) {
        const GreenArgs s = source_args(setup.g1, f.xs[ix], f.ys[iy], f.thetas[it]);
        const GreenArgs k = sink_args(setup.g2, f.xs[ix], f.ys[iy], f.thetas[it]);
        f.values[idx] = heisenberg_green(s.a, s.b, s.t, setup.lambda_res, setup.d11) *
                        heisenberg_green(k.a, k.b, k.t, setup.lambda_res, setup.d11);
      }
  return f;
}

LiftedCurve extract_mode(const CompletionSetup& setup, int n_samples) {
  setup.validate();
  if (n_samples < 3) throw Error(ErrorCode::ParamError, "need at least 3 samples");
  LiftedCurve curve;
  curve.param = CurveParam::GraphX;
  curve.s.resize(n_samples);
  curve.pos.resize(n_samples);
  curve.theta.resize(n_samples);

  const Se2& g1 = setup.g1;
  const Se2& g2 = setup.g2;
  for (int i = 0; i < n_samples; ++i) {
    const double x = g1.x + (g2.x - g1.x) * i / (n_samples - 1.0);
    curve.s[i] = x;
    if (i == 0) {
      curve.pos[i] = Vec2{g1.x, g1.y};
      curve.theta[i] = g1.theta;
      continue;
    }
    if (i == n_samples - 1) {
      curve.pos[i] = Vec2{g2.x, g2.y};
      curve.theta[i] = g2.theta;
      continue;
    }
    // Stationarity of log C~ in (y, theta) is linear; D11 cancels.
    const double a1 = x - g1.x, a2 = g2.x - x;
    const double c1 = a1 * g1.theta + 2.0 * g1.y;
    const double c2 = 2.0 * g2.y - a2 * g2.theta;
    const double d1 = 2.0 * a1 * g1.theta + 6.0 * g1.y;
    const double d2 = 6.0 * g2.y - 2.0 * a2 * g2.theta;
    const double a13 = a1 * a1 * a1, a23 = a2 * a2 * a2;
    // [m00 m01; m10 m11] [y theta]^T = [r0 r1]
    const double m00 = -2.0 / a13 - 2.0 / a23;
    const double m01 = 1.0 / (a1 * a1) - 1.0 / (a2 * a2);
    const double m10 = 6.0 / (a1 * a1) - 6.0 / (a2 * a2);
    const double m11 = -4.0 / a1 - 4.0 / a2;
    const double r0 = -c1 / a13 - c2 / a23;
    const double r1 = d1 / (a1 * a1) - d2 / (a2 * a2);
    const double det = m00 * m11 - m01 * m10;
    if (std::abs(det) < 1e-300)
      throw Error(ErrorCode::DegenerateSpan, "singular stationarity system");
    const double y = (r0 * m11 - m01 * r1) / det;
    const double theta = (m00 * r1 - r0 * m10) / det;
    curve.pos[i] = Vec2{x, y};
    curve.theta[i] = theta;
  }
  return curve;
}

LiftedCurve extract_mode_grid(const CompletionField& field) {
  LiftedCurve curve;
  curve.param = CurveParam::GraphX;
  const FieldGrid& g = field.grid;
  curve.s.resize(g.nx);
  curve.pos.resize(g.nx);
  curve.theta.resize(g.nx);
  for (int ix = 0; ix < g.nx; ++ix) {
    int by = 0, bt = 0;
    double best = -1.0;
    for (int iy = 0; iy < g.ny; ++iy)
      for (int it = 0; it < g.ntheta; ++it)
        if (field.at(ix, iy, it) > best) {
          best = field.at(ix, iy, it);
          by = iy;
          bt = it;
        }
    curve.s[ix] = field.xs[ix];
    curve.pos[ix] = Vec2{field.xs[ix], field.ys[by]};
    curve.theta[ix] = field.thetas[bt];
  }
  return curve;
}

LiftedCurve cubic_hermite(const Se2& g1, const Se2& g2, int n_samples) {
  const double h = g2.x - g1.x;
  if (h == 0.0) throw Error(ErrorCode::DegenerateSpan, "coincident x endpoints");
  if (n_samples < 2) throw Error(ErrorCode::ParamError, "need at least 2 samples");
  // y(x1+t) = y1 + theta1 t + b t^2 + a t^3 on t in [0, h].
  const double a = (g2.theta * h - 2.0 * (g2.y - g1.y) + g1.theta * h) / (h * h * h);
  const double b = (3.0 * (g2.y - g1.y) - (2.0 * g1.theta + g2.theta) * h) / (h * h);

  LiftedCurve curve;
  curve.param = CurveParam::GraphX;
  curve.s.resize(n_samples);
  curve.pos.resize(n_samples);
  curve.theta.resize(n_samples);
  for (int i = 0; i < n_samples; ++i) {
    const double t = h * i / (n_samples - 1.0);
    curve.s[i] = g1.x + t;
    curve.pos[i] = Vec2{g1.x + t, g1.y + t * (g1.theta + t * (b + t * a))};
    curve.theta[i] = g1.theta + t * (2.0 * b + 3.0 * a * t);
  }
  return curve;
}

namespace {

// Unsigned curvature of the circumcircle through three points.
double circumcurvature(const Vec2& p0, const Vec2& p1, const Vec2& p2) {
  const Vec2 a = p1 - p0, b = p2 - p1, c = p2 - p0;
  const double cross = a.x * b.y - a.y * b.x;
  const double den = a.norm() * b.norm() * c.norm();
  if (den < 1e-300) return 0.0;
  return 2.0 * std::abs(cross) / den;
}

// Resample to (approximately) uniform arclength with ~512 intervals.
std::vector<Vec2> resample_arclength(const std::vector<Vec2>& pts, int n_out) {
  std::vector<double> cum(pts.size(), 0.0);
  for (size_t i = 1; i < pts.size(); ++i) cum[i] = cum[i - 1] + (pts[i] - pts[i - 1]).norm();
  const double total = cum.back();
  std::vector<Vec2> out(n_out);
  if (total <= 0.0) {
    std::fill(out.begin(), out.end(), pts.front());
    return out;
  }
  size_t j = 0;
  for (int i = 0; i < n_out; ++i) {
    const double target = total * i / (n_out - 1.0);
    while (j + 1 < cum.size() && cum[j + 1] < target) ++j;
    if (j + 1 >= cum.size()) {
      out[i] = pts.back();
      continue;
    }
    const double seg = cum[j + 1] - cum[j];
    const double t = seg > 0.0 ? (target - cum[j]) / seg : 0.0;
    out[i] = pts[j] + (pts[j + 1] - pts[j]) * t;
  }
  return out;
}

}  // namespace

double sr_length(const LiftedCurve& curve, double beta) {
  if (curve.pos.size() < 3) throw Error(ErrorCode::TooShort, "need at least 3 samples");
  if (beta < 0.0) throw Error(ErrorCode::ParamError, "negative bending weight");
  const std::vector<Vec2> pts = resample_arclength(curve.pos, 513);
  const int n = static_cast<int>(pts.size());
  std::vector<double> kappa(n, 0.0);
  for (int i = 1; i + 1 < n; ++i) kappa[i] = circumcurvature(pts[i - 1], pts[i], pts[i + 1]);
  kappa[0] = kappa[1];
  kappa[n - 1] = kappa[n - 2];
  double len = 0.0;
  for (int i = 1; i < n; ++i) {
    const double ds = (pts[i] - pts[i - 1]).norm();
    const double fa = std::sqrt(kappa[i - 1] * kappa[i - 1] + beta * beta);
    const double fb = std::sqrt(kappa[i] * kappa[i] + beta * beta);
    len += 0.5 * (fa + fb) * ds;
  }
  return len;
}

double elastica_energy(const LiftedCurve& curve, double beta) {
  if (curve.pos.size() < 3) throw Error(ErrorCode::TooShort, "need at least 3 samples");
  if (curve.param == CurveParam::GraphX) {
    // integral over x of |theta'(x)|^2 + beta^2 (Heisenberg graph form).
    double e = 0.0;
    for (size_t i = 1; i < curve.s.size(); ++i) {
      const double dx = curve.s[i] - curve.s[i - 1];
      if (dx <= 0.0) throw Error(ErrorCode::ParamError, "graph curve must advance in x");
      const double dth = (curve.theta[i] - curve.theta[i - 1]) / dx;
      e += (dth * dth + beta * beta) * dx;
    }
    return e;
  }
  const std::vector<Vec2> pts = resample_arclength(curve.pos, 513);
  const int n = static_cast<int>(pts.size());
  std::vector<double> kappa(n, 0.0);
  for (int i = 1; i + 1 < n; ++i) kappa[i] = circumcurvature(pts[i - 1], pts[i], pts[i + 1]);
  kappa[0] = kappa[1];
  kappa[n - 1] = kappa[n - 2];
  double e = 0.0;
  for (int i = 1; i < n; ++i) {
    const double ds = (pts[i] - pts[i - 1]).norm();
    e += 0.5 * ((kappa[i - 1] * kappa[i - 1] + beta * beta) +
                (kappa[i] * kappa[i] + beta * beta)) *
         ds;
  }
  return e;
}

double elastica_closed_form(double x2, double y2, double theta2, double beta) {
  if (x2 <= 0.0) throw Error(ErrorCode::ParamError, "span must be positive");
  return beta * beta * x2 +
         4.0 * (3.0 * y2 * y2 + 3.0 * x2 * y2 * theta2 + x2 * x2 * theta2 * theta2) /
             (x2 * x2 * x2);
}

}  // namespace orientrace
