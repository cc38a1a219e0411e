#include "orientrace/oscore.hpp"

#include <cmath>
#include <cstdio>

#include "orientrace/parallel.hpp"

namespace orientrace {

cplx OrientationScore::sample(double x, double y, double theta) const {
  auto v = try_sample(x, y, theta);
  if (!v) throw Error(ErrorCode::OutOfBounds, "sample point outside the score grid");
  return *v;
}

std::optional<cplx> OrientationScore::try_sample(double x, double y, double theta) const {
  if (!(x >= 0.0 && x <= width - 1 && y >= 0.0 && y <= height - 1)) return std::nullopt;
  const double s_theta = kTwoPi / n_orient;
  const double tpos = wrap_two_pi(theta) / s_theta;
  int i0 = static_cast<int>(std::floor(tpos));
  const double tf = tpos - i0;
  i0 %= n_orient;
  const int i1 = (i0 + 1) % n_orient;

  const int x0 = std::min(static_cast<int>(std::floor(x)), width - 2 >= 0 ? width - 2 : 0);
  const int y0 = std::min(static_cast<int>(std::floor(y)), height - 2 >= 0 ? height - 2 : 0);
  const double fx = x - x0, fy = y - y0;
  auto bil = [&](int i) {
    const cplx v00 = at(x0, y0, i);
    const cplx v10 = at(std::min(x0 + 1, width - 1), y0, i);
    const cplx v01 = at(x0, std::min(y0 + 1, height - 1), i);
    const cplx v11 = at(std::min(x0 + 1, width - 1), std::min(y0 + 1, height - 1), i);
    return (1 - fx) * (1 - fy) * v00 + fx * (1 - fy) * v10 + (1 - fx) * fy * v01 + fx * fy * v11;
  };
  return (1.0 - tf) * bil(i0) + tf * bil(i1);
}

std::vector<double> OrientationScore::orientation_column_abs(double x, double y) const {
  std::vector<double> col(n_orient);
  for (int i = 0; i < n_orient; ++i) {
    const double s_theta = kTwoPi / n_orient;
    col[i] = std::abs(sample(x, y, i * s_theta));
  }
  return col;
}

OrientationScore transform(const Image2D& f, const WaveletStack& stack) {
  if (f.width != stack.width || f.height != stack.height)
    throw Error(ErrorCode::DimError, "image and kernel stack dimensions differ");

  double lo = f.data[0], hi = f.data[0], mean = 0.0;
  for (double v : f.data) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    mean += v;
  }
  mean /= static_cast<double>(f.data.size());
  if (std::abs(mean) > 1e-9 * std::max(hi - lo, 1e-300))
    std::fprintf(stderr,
                 "orientrace: warning: input mean %.3g is not negligible; "
                 "scores of the DC component follow the kernel DC policy\n",
                 mean);

  OrientationScore u;
  u.width = f.width;
  u.height = f.height;
  u.n_orient = stack.n_orient;
  u.thetas = stack.thetas;
  u.layers.resize(stack.n_orient);

  std::vector<cplx> fc(f.data.begin(), f.data.end());
  const Spectrum2D fhat = fft2(fc, f.width, f.height);

  parallel_for(stack.n_orient, [&](int i) {
    Spectrum2D prod(u.width, u.height);
    const auto& k = stack.fourier[i].data;
    for (size_t b = 0; b < k.size(); ++b) prod.data[b] = std::conj(k[b]) * fhat.data[b];
    u.layers[i] = ifft2(prod);
  });
  return u;
}

namespace {

Spectrum2D resynthesize(const OrientationScore& u, const WaveletStack& stack) {
  if (u.width != stack.width || u.height != stack.height || u.n_orient != stack.n_orient)
    throw Error(ErrorCode::DimError, "score and kernel stack dimensions differ");
  std::vector<Spectrum2D> hats(u.n_orient);
  parallel_for(u.n_orient, [&](int i) { hats[i] = fft2(u.layers[i], u.width, u.height); });
  // Accumulate in fixed orientation order so the result is bitwise identical
  // no matter the thread count.
  Spectrum2D acc(u.width, u.height);
  for (int i = 0; i < u.n_orient; ++i) {
    const auto& k = stack.fourier[i].data;
    for (size_t b = 0; b < acc.data.size(); ++b) acc.data[b] += k[b] * hats[i].data[b];
  }
  return acc;
}

}  // namespace

Image2D reconstruct(const OrientationScore& u, const WaveletStack& stack,
                    const ReconstructOptions& opt) {
  Spectrum2D acc = resynthesize(u, stack);
  if (opt.divide_m_psi) {
    const std::vector<double> denom = stack.frame_denominator();
    double dmax = 0.0;
    for (double d : denom) dmax = std::max(dmax, d);
    // Ill-conditioned when the frame function collapses inside the pass-band.
    const double band = stack.gamma * kPi;
    const double weight = kTwoPi / stack.n_orient;
    for (int ky = 0; ky < u.height; ++ky) {
      const double wy = bin_freq(ky, u.height);
      for (int kx = 0; kx < u.width; ++kx) {
        const double wx = bin_freq(kx, u.width);
        if (std::hypot(wx, wy) >= band) continue;
        if (weight * denom[static_cast<size_t>(ky) * u.width + kx] < 1e-6)
          throw Error(ErrorCode::IllConditioned,
                      "frame function vanishes inside the protected pass-band");
      }
    }
    const double eps = 1e-12 * dmax;
    for (size_t b = 0; b < acc.data.size(); ++b)
      acc.data[b] = denom[b] > eps ? acc.data[b] / denom[b] : cplx(0.0);
  } else {
    const double weight = kTwoPi / stack.n_orient;
    for (cplx& v : acc.data) v *= weight;
  }
  return ifft2_real(acc);
}

Image2D reconstruct_approx(const OrientationScore& u, const WaveletStack& stack) {
  if (stack.family != Family::Cake || stack.sidedness != Sidedness::Double)
    throw Error(ErrorCode::ParamError,
                "orientation-integration reconstruction requires a double-sided cake stack");
  if (u.width != stack.width || u.height != stack.height || u.n_orient != stack.n_orient)
    throw Error(ErrorCode::DimError, "score and kernel stack dimensions differ");
  Image2D out;
  out.width = u.width;
  out.height = u.height;
  out.data.assign(static_cast<size_t>(u.width) * u.height, 0.0);
  for (int i = 0; i < u.n_orient; ++i)
    for (size_t b = 0; b < out.data.size(); ++b) out.data[b] += u.layers[i][b].real();
  for (double& v : out.data) v *= stack.approx_gain;
  return out;
}

}  // namespace orientrace
