#pragma once

// FFT utilities: unitary 2-D transforms (FFTW-backed), Gaussian blurs,
// a 1-D Gaussian scale space with extremum tracking ("toppoints"), and the
// directional Hilbert multiplier. All transforms use symmetric 1/sqrt(N)
// scaling so Parseval holds exactly.

#include <vector>

#include "orientrace/image.hpp"

namespace orientrace {

struct Spectrum2D {
  int width = 0;
  int height = 0;
  std::vector<cplx> data;  // row-major, bin (kx,ky) at ky*width+kx

  Spectrum2D() = default;
  Spectrum2D(int w, int h) : width(w), height(h), data(static_cast<size_t>(w) * h) {}
  cplx& at(int kx, int ky) { return data[static_cast<size_t>(ky) * width + kx]; }
  cplx at(int kx, int ky) const { return data[static_cast<size_t>(ky) * width + kx]; }
};

// Signed frequency in radians per pixel for bin k of an n-point axis.
inline double bin_freq(int k, int n) {
  const int s = (k <= n / 2) ? k : k - n;
  return kTwoPi * s / n;
}

Spectrum2D fft2(const std::vector<cplx>& in, int w, int h);
std::vector<cplx> ifft2(const Spectrum2D& s);
Spectrum2D fft2(const Image2D& im);
// Real part of the inverse transform.
Image2D ifft2_real(const Spectrum2D& s);

std::vector<cplx> fft1(const std::vector<cplx>& in);
std::vector<cplx> ifft1(const std::vector<cplx>& in);

// Gaussian blur with transfer function exp(-sigma^2 |w|^2 / 2). Exact
// semigroup property in the periodic case; Mirror reflects, blurs, crops.
Image2D gaussian_blur(const Image2D& im, double sigma, Boundary boundary = Boundary::Periodic);
std::vector<double> gaussian_blur_1d(const std::vector<double>& f, double sigma,
                                     Boundary boundary = Boundary::Mirror);

// Geometric scale ladder in variance units t; level 0 is the unblurred input.
struct ScaleLadder {
  double t0 = 0.5;
  double ratio = 1.4142135623730951;
  int levels = 16;

  std::vector<double> scales() const {
    std::vector<double> t(levels, 0.0);
    for (int i = 1; i < levels; ++i) t[i] = t0 * std::pow(ratio, i - 1);
    return t;
  }
};

struct ScaleSpace1D {
  std::vector<double> scales;               // variance per level, scales[0] == 0
  std::vector<std::vector<double>> levels;  // levels[i] = blurred profile
};

ScaleSpace1D scale_space_1d(const std::vector<double>& profile, const ScaleLadder& ladder);

struct Extremum {
  double pos = 0.0;
  double value = 0.0;
  bool is_max = false;
};

// Strict interior local extrema, positions refined by parabolic interpolation.
std::vector<Extremum> local_extrema_1d(const std::vector<double>& f);

struct Toppoint {
  double pos = 0.0;    // position of the merge event
  double scale = 0.0;  // first ladder scale at which the pair is gone
  bool persisted = false;
};

// Tracked life of one fine-scale extremum through the ladder.
struct ExtremumTrack {
  Extremum seed;                  // finest-scale detection
  std::vector<double> positions;  // per surviving level
  int last_level = 0;             // last ladder index where it is alive
  bool persisted = false;
  double death_scale = 0.0;       // scale of first disappearance (if !persisted)
};

struct ScaleTracks {
  std::vector<ExtremumTrack> tracks;
  std::vector<Toppoint> toppoints;
};

// Links extrema across levels (nearest neighbour of equal type within
// 2*sqrt(dt)) and reports annihilation events.
ScaleTracks toppoints_1d(const ScaleSpace1D& ss);

// Directional Hilbert transform, multiplier i*sign(w). DC and Nyquist bins
// are zeroed. hilbert_1d(hilbert_1d(f)) == -f for band-interior content.
std::vector<double> hilbert_1d(const std::vector<double>& f);

// 2-D Hilbert along direction e_eta(theta): multiplier i*sign(w . e_eta).
Spectrum2D hilbert_multiplier_2d(const Spectrum2D& s, double theta);

}  // namespace orientrace
