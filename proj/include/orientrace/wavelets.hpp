#pragma once

// Oriented wavelet stacks for the orientation-score transform.
//
// Cake kernels are built in the Fourier domain: a B-spline angular wedge
// times a Taylor-series radial taper, one wedge per orientation, tiling the
// full circle once. The kernel for orientation theta occupies the half-plane
// omega . e_eta(theta) < 0; with the i*sign(omega . e_eta) Hilbert convention
// this makes Im psi the Hilbert transform of Re psi along e_eta, and makes
// Im U negative at a dark vessel's left edge and positive at its right edge.
//
// Kernels carry a per-angle flattening factor chosen so the angular power
// sum (2*pi/N_o) * sum_i |F psi_i|^2 equals M_N(rho)^2 exactly; the stack is
// then flat (well-posed) across the protected pass-band rho < gamma*nyquist.
//
// Gabor kernels are spatial complex exponentials under an anisotropic
// Gaussian, L2-normalized, used as a single-scale (non-invertible) family.

#include <string>
#include <vector>

#include "orientrace/spectral.hpp"

namespace orientrace {

// exp(-u) * sum_{k<=N} u^k/k! evaluated at u = rho^2/t: a smooth low-pass
// whose inflection in rho sits at rho = sqrt(t*(1+2N)/2).
double radial_mn(double rho, int taylor_n, double t);

// Centered cardinal B-spline of order k (support (-(k+1)/2, (k+1)/2)).
double bspline(int k, double x);

enum class Family { Cake, Gabor };
enum class Sidedness { Double, Plus, Minus };

struct CakeParams {
  int n_orient = 36;       // even
  int spline_order = 2;    // k
  int taylor_order = 60;   // N
  double gamma = 0.8;      // protected pass-band fraction of the Nyquist radius
  double cut = 1.0;        // radial taper inflection as a fraction of Nyquist
  double spatial_sigma = 0.0;  // Gaussian window; 0 = twice the image diagonal
  bool dc_removed = false;     // subtract the mean of Re psi per kernel
};

struct GaborParams {
  int n_orient = 36;
  double epsilon = 4.0;    // anisotropy of A = diag(eps^-1/2, 1)
  double k0 = 3.0;         // modulation frequency along e_eta (canonical (0, k0))
  double scale = 1.0;      // dilation a; matched vessel width tau = 2*pi*a/3
};

struct WaveletStack {
  Family family = Family::Cake;
  Sidedness sidedness = Sidedness::Double;
  int width = 0;
  int height = 0;
  int n_orient = 0;
  std::vector<double> thetas;
  // Per orientation, full-size grids. Spatial kernels are stored unshifted
  // (origin at bin 0, negative coordinates wrapped); fourier[i] == fft2(spatial[i]).
  std::vector<std::vector<cplx>> spatial;
  std::vector<Spectrum2D> fourier;
  // Gain applied by reconstruct_approx: mean plain-sum response of the family.
  double approx_gain = 1.0;
  double gamma = 0.8;

  CakeParams cake;    // valid when family == Cake
  GaborParams gabor;  // valid when family == Gabor

  // sum_i |F psi_i(w)|^2, the frame denominator used by exact reconstruction.
  std::vector<double> frame_denominator() const;
};

// Throws Error{ParamError} for odd n_orient, Error{DimError} for odd dims.
WaveletStack build_cake_stack(int width, int height, const CakeParams& p);
WaveletStack build_gabor_stack(int width, int height, const GaborParams& p);

// Splits each kernel with the soft step w(xi) = 1/2 + erf(xi)/2 along its
// own e_xi axis. plus + minus == original exactly.
WaveletStack split_directional(const WaveletStack& stack, Sidedness side);

struct MPsiReport {
  std::vector<double> grid;  // (2*pi/N_o) * sum_i |F psi_i|^2, full spectrum grid
  int width = 0;
  int height = 0;
  double band_min = 0.0;  // over the disk rho < gamma * nyquist
  double band_max = 0.0;
  bool invertible = false;
  std::string verdict;  // "invertible" | "non-invertible"
};

MPsiReport compute_m_psi(const WaveletStack& stack);

}  // namespace orientrace
