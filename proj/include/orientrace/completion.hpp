#pragma once

// Heisenberg-approximation completion fields and the curve machinery built
// on them: closed-form resolvent Green's function, source*sink field, exact
// per-slice mode extraction, cubic Hermite connectors, sub-Riemannian length
// and elastica energy. Group convention: (x,y,theta)*(x',y',theta') =
// (x+x', y+y'+theta x', theta+theta'), inversion iota(a,b,c) = (-a,b,-c).

#include <vector>

#include "orientrace/common.hpp"

namespace orientrace {

struct CompletionSetup {
  Se2 g1;  // source
  Se2 g2;  // sink; requires g2.x > g1.x
  double lambda_res = 1.0;  // resolvent decay rate
  double d11 = 0.125;       // angular diffusion
  double beta = 1.0;        // bending weight

  void validate() const;
};

// R(x,y,theta) = lambda sqrt(3) / (2 D11 pi x^2) exp(-lambda x)
//                exp(-(3(x theta - 2y)^2 + x^2 theta^2)/(4 x^3 D11)), x > 0.
double heisenberg_green(double x, double y, double theta, double lambda_res, double d11);

struct FieldGrid {
  int nx = 64, ny = 64, ntheta = 64;
  double y_min = -1.0, y_max = 1.0;
  double theta_min = -1.0, theta_max = 1.0;
};

struct CompletionField {
  FieldGrid grid;
  std::vector<double> xs, ys, thetas;
  std::vector<double> values;  // [ix][iy][itheta]

  double at(int ix, int iy, int it) const {
    return values[(static_cast<size_t>(ix) * grid.ny + iy) * grid.ntheta + it];
  }
};

// Pointwise product R(g1^-1 g) * R(iota(g2^-1 g)) on x in (g1.x, g2.x).
CompletionField completion_field_h3(const CompletionSetup& setup, const FieldGrid& grid);

enum class CurveParam { Arclength, GraphX };

struct LiftedCurve {
  CurveParam param = CurveParam::GraphX;
  std::vector<double> s;      // x for GraphX, arclength for Arclength
  std::vector<Vec2> pos;
  std::vector<double> theta;  // slope y'(x) for GraphX, tangent angle otherwise
};

// Stationary point of log C~ in (y,theta) per x-slice, solved exactly from
// the 2x2 linear system; endpoints take the boundary data.
LiftedCurve extract_mode(const CompletionSetup& setup, int n_samples = 201);

// Grid-argmax fallback over a sampled field (cross-check for extract_mode).
LiftedCurve extract_mode_grid(const CompletionField& field);

// Unique cubic y(x) with y(x1)=y1, y'(x1)=theta1, y(x2)=y2, y'(x2)=theta2
// (theta plays the slope in the graph parameterization). Throws
// Error{DegenerateSpan} when x2 == x1.
LiftedCurve cubic_hermite(const Se2& g1, const Se2& g2, int n_samples = 201);

// integral sqrt(kappa^2 + beta^2) ds; curvature from three-point
// circumcircles after internal arclength resampling.
double sr_length(const LiftedCurve& curve, double beta);

// integral (kappa^2 + beta^2) ds, or the graph form
// integral (|theta'(x)|^2 + beta^2) dx for GraphX curves.
double elastica_energy(const LiftedCurve& curve, double beta);

// Minimal graph-form energy connecting (0,0,0) to (x2,y2,theta2) where
// theta2 is the sink-frame (reversed) end tangent; the literal end slope of
// the optimal cubic is -theta2. With y2 = 0 or theta2 = 0 both conventions
// coincide.
double elastica_closed_form(double x2, double y2, double theta2, double beta);

}  // namespace orientrace
