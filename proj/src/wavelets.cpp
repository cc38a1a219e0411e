#include "orientrace/wavelets.hpp"

#include <algorithm>
#include <cassert>

#include "orientrace/parallel.hpp"

namespace orientrace {

double radial_mn(double rho, int taylor_n, double t) {
  if (t <= 0.0) throw Error(ErrorCode::ParamError, "radial taper scale must be positive");
  const double u = rho * rho / t;
  // exp(-u) * sum_{k<=N} u^k/k!, summed with the exponential folded into the
  // first term so large u underflows gracefully to 0.
  double term = std::exp(-u);
  double sum = term;
  for (int k = 1; k <= taylor_n; ++k) {
    term *= u / k;
    sum += term;
  }
  return sum > 1.0 ? 1.0 : sum;
}

double bspline(int k, double x) {
  if (k < 0) throw Error(ErrorCode::ParamError, "negative spline order");
  if (k == 0) return (x >= -0.5 && x < 0.5) ? 1.0 : 0.0;
  // Cardinal B-spline: (1/k!) sum_j (-1)^j C(k+1, j) (x + (k+1)/2 - j)_+^k.
  const double half = 0.5 * (k + 1);
  if (x <= -half || x >= half) return 0.0;
  double sum = 0.0;
  double binom = 1.0;  // C(k+1, j)
  for (int j = 0; j <= k + 1; ++j) {
    const double t = x + half - j;
    if (t > 0.0) {
      double p = 1.0;
      for (int e = 0; e < k; ++e) p *= t;
      sum += (j % 2 == 0 ? 1.0 : -1.0) * binom * p;
    }
    binom = binom * (k + 1 - j) / (j + 1);
  }
  double fact = 1.0;
  for (int e = 2; e <= k; ++e) fact *= e;
  return sum / fact;
}

namespace {

// Signed wrapped spatial coordinate of grid index i on an n-periodic axis.
inline double wrapped_coord(int i, int n) { return i <= n / 2 ? i : i - n; }

void check_dims(int width, int height) {
  if (width <= 0 || height <= 0 || width % 2 != 0 || height % 2 != 0)
    throw Error(ErrorCode::DimError, "kernel grids require positive even dimensions");
}

// Angular power of the wedge tiling at azimuth phi: sum_j B_k(u_j(phi))^2.
double wedge_power(double phi, int n_orient, int k) {
  const double s_theta = kTwoPi / n_orient;
  double sum = 0.0;
  // Only wedges within (k+1)/2 spline units contribute.
  const double u0 = (phi + kPi / 2) / s_theta;
  const int jc = static_cast<int>(std::floor(u0));
  for (int j = jc - (k + 2); j <= jc + (k + 2); ++j) {
    const double u = u0 - j;
    if (std::abs(u) < 0.5 * (k + 1)) {
      const double b = bspline(k, u);
      sum += b * b;
    }
  }
  return sum;
}

// Multiplies the (unshifted) spatial kernel by the peak-one Gaussian window
// and by the erf step when splitting.
void window_spatial(std::vector<cplx>& spatial, int w, int h, double sigma_s) {
  for (int y = 0; y < h; ++y) {
    const double yy = wrapped_coord(y, h);
    for (int x = 0; x < w; ++x) {
      const double xx = wrapped_coord(x, w);
      spatial[static_cast<size_t>(y) * w + x] *=
          std::exp(-(xx * xx + yy * yy) / (2.0 * sigma_s * sigma_s));
    }
  }
}

void remove_dc_real_part(std::vector<cplx>& spatial) {
  double mean = 0.0;
  for (const cplx& v : spatial) mean += v.real();
  mean /= static_cast<double>(spatial.size());
  for (cplx& v : spatial) v -= mean;
}

}  // namespace

std::vector<double> WaveletStack::frame_denominator() const {
  std::vector<double> d(static_cast<size_t>(width) * height, 0.0);
  for (int i = 0; i < n_orient; ++i) {
    const auto& f = fourier[i].data;
    for (size_t b = 0; b < d.size(); ++b) d[b] += std::norm(f[b]);
  }
  return d;
}

WaveletStack build_cake_stack(int width, int height, const CakeParams& p) {
  check_dims(width, height);
  if (p.n_orient <= 0 || p.n_orient % 2 != 0)
    throw Error(ErrorCode::ParamError, "orientation count must be even and positive");
  if (p.gamma <= 0.0 || p.gamma >= 1.0 || p.cut <= 0.0 || p.cut > 1.0)
    throw Error(ErrorCode::ParamError, "band fractions must lie in (0,1]");
  if (p.spline_order < 0 || p.taylor_order < 1)
    throw Error(ErrorCode::ParamError, "bad spline/taylor order");
  if (p.spline_order + 1 > p.n_orient)
    throw Error(ErrorCode::ParamError, "wedge wider than the full circle");

  WaveletStack st;
  st.family = Family::Cake;
  st.width = width;
  st.height = height;
  st.n_orient = p.n_orient;
  st.gamma = p.gamma;
  st.cake = p;
  const double s_theta = kTwoPi / p.n_orient;
  st.thetas.resize(p.n_orient);
  for (int i = 0; i < p.n_orient; ++i) st.thetas[i] = i * s_theta;

  const double nyquist = kPi;
  // Radial taper inflection at cut * nyquist.
  const double t_scale = 2.0 * (p.cut * nyquist) * (p.cut * nyquist) / (1.0 + 2.0 * p.taylor_order);
  // Default window: twice the image diagonal. The window multiplies the
  // spatial kernel, i.e. convolves the Fourier wedges with a Gaussian of
  // width 1/sigma_s; near DC the wedges are angularly thin, so a tighter
  // window smears them and M_psi sags well below 1 at low frequencies.
  const double sigma_s =
      p.spatial_sigma > 0.0 ? p.spatial_sigma : 2.0 * std::hypot(width, height);

  // Flattening factor per azimuth so (2 pi / N_o) sum_i |F psi_i|^2 = M_N^2.
  auto flatten = [&](double phi) {
    return std::sqrt(p.n_orient / (kTwoPi * wedge_power(phi, p.n_orient, p.spline_order)));
  };

  st.spatial.resize(p.n_orient);
  st.fourier.resize(p.n_orient);

  std::vector<Spectrum2D> raw(p.n_orient, Spectrum2D(width, height));
  parallel_for(p.n_orient, [&](int i) {
    // Wedge center for orientation theta sits at azimuth theta - pi/2
    // (the omega . e_eta < 0 half-plane; see header).
    const double theta = st.thetas[i];
    Spectrum2D& sp = raw[i];
    for (int ky = 0; ky < height; ++ky) {
      const double wy = bin_freq(ky, height);
      const bool ny_row = (ky == height / 2);
      for (int kx = 0; kx < width; ++kx) {
        if (kx == 0 && ky == 0) {
          sp.at(kx, ky) = 1.0 / std::sqrt(kTwoPi);
          continue;
        }
        if (ny_row || kx == width / 2) {
          sp.at(kx, ky) = 0.0;  // unpaired bins break Hermitian symmetry
          continue;
        }
        const double wx = bin_freq(kx, width);
        const double rho = std::hypot(wx, wy);
        const double phi = std::atan2(wy, wx);
        const double u = wrap_pi(phi - theta + kPi / 2) / s_theta;
        if (std::abs(u) >= 0.5 * (p.spline_order + 1)) {
          sp.at(kx, ky) = 0.0;
          continue;
        }
        sp.at(kx, ky) = flatten(phi) * bspline(p.spline_order, u) *
                        radial_mn(rho, p.taylor_order, t_scale);
      }
    }
    st.spatial[i] = ifft2(sp);
    window_spatial(st.spatial[i], width, height, sigma_s);
    if (p.dc_removed) remove_dc_real_part(st.spatial[i]);
    st.fourier[i] = fft2(st.spatial[i], width, height);
  });

  // Mean flattening gain; reconstruct_approx divides the plain layer sum by it.
  const double mean_power = bspline(2 * p.spline_order + 1, 0.0);
  st.approx_gain = std::sqrt(kTwoPi * mean_power / p.n_orient);
  return st;
}

WaveletStack build_gabor_stack(int width, int height, const GaborParams& p) {
  check_dims(width, height);
  if (p.n_orient <= 0 || p.n_orient % 2 != 0)
    throw Error(ErrorCode::ParamError, "orientation count must be even and positive");
  if (p.scale <= 0.0 || p.epsilon <= 0.0)
    throw Error(ErrorCode::ParamError, "scale and anisotropy must be positive");

  WaveletStack st;
  st.family = Family::Gabor;
  st.width = width;
  st.height = height;
  st.n_orient = p.n_orient;
  st.gabor = p;
  st.thetas.resize(p.n_orient);
  for (int i = 0; i < p.n_orient; ++i) st.thetas[i] = i * kTwoPi / p.n_orient;

  st.spatial.resize(p.n_orient);
  st.fourier.resize(p.n_orient);

  // Unit L2 norm, preserved under the a^-1 psi(x/a) dilation.
  const double c_psi = std::sqrt(kPi * std::sqrt(p.epsilon));
  const double a = p.scale;

  parallel_for(p.n_orient, [&](int i) {
    const double c = std::cos(st.thetas[i]), s = std::sin(st.thetas[i]);
    std::vector<cplx> sp(static_cast<size_t>(width) * height);
    for (int y = 0; y < height; ++y) {
      const double yy = wrapped_coord(y, height);
      for (int x = 0; x < width; ++x) {
        const double xx = wrapped_coord(x, width);
        // Canonical coordinates: xi along e_xi(theta), eta along e_eta(theta).
        const double xi = (c * xx + s * yy) / a;
        const double eta = (-s * xx + c * yy) / a;
        const double env = std::exp(-0.5 * (xi * xi / p.epsilon + eta * eta));
        sp[static_cast<size_t>(y) * width + x] =
            (env / (a * c_psi)) * std::exp(cplx(0.0, p.k0 * eta));
      }
    }
    st.fourier[i] = fft2(sp, width, height);
    st.spatial[i] = std::move(sp);
  });
  st.approx_gain = 1.0;
  return st;
}

WaveletStack split_directional(const WaveletStack& stack, Sidedness side) {
  if (side == Sidedness::Double) return stack;
  WaveletStack st = stack;
  st.sidedness = side;
  parallel_for(st.n_orient, [&](int i) {
    const Vec2 xi_dir = frame_xi(st.thetas[i]);
    for (int y = 0; y < st.height; ++y) {
      const double yy = wrapped_coord(y, st.height);
      for (int x = 0; x < st.width; ++x) {
        const double xx = wrapped_coord(x, st.width);
        const double xi = xx * xi_dir.x + yy * xi_dir.y;
        const double w = 0.5 + 0.5 * std::erf(xi);
        // One side takes the larger share of the weight; the other is its
        // exact complement (Sterbenz: v - v*max(w,1-w) is exact because the
        // product lies in [v/2, v]), so the sides recombine bit-for-bit.
        cplx& v = st.spatial[i][static_cast<size_t>(y) * st.width + x];
        const bool plus_is_big = w >= 0.5;
        const cplx big = v * (plus_is_big ? w : 1.0 - w);
        const cplx small = v - big;
        v = ((side == Sidedness::Plus) == plus_is_big) ? big : small;
      }
    }
    st.fourier[i] = fft2(st.spatial[i], st.width, st.height);
  });
  return st;
}

MPsiReport compute_m_psi(const WaveletStack& stack) {
  MPsiReport rep;
  rep.width = stack.width;
  rep.height = stack.height;
  const std::vector<double> denom = stack.frame_denominator();
  rep.grid.resize(denom.size());
  const double weight = kTwoPi / stack.n_orient;
  for (size_t i = 0; i < denom.size(); ++i) rep.grid[i] = weight * denom[i];

  const double band = stack.gamma * kPi;
  double lo = 1e300, hi = -1e300;
  for (int ky = 0; ky < stack.height; ++ky) {
    const double wy = bin_freq(ky, stack.height);
    for (int kx = 0; kx < stack.width; ++kx) {
      const double wx = bin_freq(kx, stack.width);
      if (std::hypot(wx, wy) >= band) continue;
      const double v = rep.grid[static_cast<size_t>(ky) * stack.width + kx];
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  rep.band_min = lo;
  rep.band_max = hi;
  // Well-posedness: bounded away from zero and from above across the band.
  rep.invertible = lo > 1e-2 && hi < 1e2;
  rep.verdict = rep.invertible ? "invertible" : "non-invertible";
  return rep;
}

}  // namespace orientrace
