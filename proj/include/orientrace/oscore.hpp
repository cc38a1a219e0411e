#pragma once

// Orientation scores: U(x, theta_i) = (correlation of f with the oriented
// kernel psi_theta_i), computed as F^-1[ conj(F psi_i) . F f ] per layer.
// Exact reconstruction divides the adjoint resynthesis by the stack's frame
// denominator sum_i |F psi_i|^2, so the round trip is exact wherever the
// stack has support.

#include <optional>
#include <vector>

#include "orientrace/wavelets.hpp"

namespace orientrace {

struct OrientationScore {
  int width = 0;
  int height = 0;
  int n_orient = 0;
  std::vector<double> thetas;
  std::vector<std::vector<cplx>> layers;  // layers[i][y*width+x]

  cplx& at(int x, int y, int i) { return layers[i][static_cast<size_t>(y) * width + x]; }
  cplx at(int x, int y, int i) const { return layers[i][static_cast<size_t>(y) * width + x]; }

  // Bilinear in x,y, linear in theta with wraparound.
  // Throws Error{OutOfBounds} outside the grid.
  cplx sample(double x, double y, double theta) const;
  std::optional<cplx> try_sample(double x, double y, double theta) const;

  // |U| over all layers at a spatial point (bilinear per layer).
  std::vector<double> orientation_column_abs(double x, double y) const;
};

// Layers parallel over orientations. Warns to stderr when |mean f| is not
// negligible (the score of the DC component depends on the DC kernel policy).
OrientationScore transform(const Image2D& f, const WaveletStack& stack);

struct ReconstructOptions {
  bool divide_m_psi = true;
};

// Exact inverse (divide_m_psi) or the band-taper approximation without the
// division. Throws Error{IllConditioned} when division is requested and
// M_psi dips below 1e-6 inside the protected pass-band.
Image2D reconstruct(const OrientationScore& u, const WaveletStack& stack,
                    const ReconstructOptions& opt = {});

// Orientation integration only: Re[sum_i U_i] * approx_gain. Cake stacks only.
Image2D reconstruct_approx(const OrientationScore& u, const WaveletStack& stack);

}  // namespace orientrace
