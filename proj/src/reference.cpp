#include "orientrace/reference.hpp"

#include <cmath>

namespace orientrace {

Spectrum2D dft2_direct(const std::vector<cplx>& in, int width, int height, int sign) {
  if (static_cast<size_t>(width) * height != in.size())
    throw Error(ErrorCode::DimError, "buffer does not match the stated dimensions");
  Spectrum2D out(width, height);
  const double scale = 1.0 / std::sqrt(static_cast<double>(width) * height);
  for (int ky = 0; ky < height; ++ky)
    for (int kx = 0; kx < width; ++kx) {
      cplx acc = 0.0;
      for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
          const double phase =
              sign * kTwoPi *
              (static_cast<double>(kx) * x / width + static_cast<double>(ky) * y / height);
          acc += in[static_cast<size_t>(y) * width + x] * std::polar(1.0, phase);
        }
      out.at(kx, ky) = acc * scale;
    }
  return out;
}

OrientationScore transform_direct(const Image2D& f, const WaveletStack& stack) {
  if (f.width != stack.width || f.height != stack.height)
    throw Error(ErrorCode::DimError, "image and kernel stack dimensions differ");
  const int w = f.width, h = f.height;
  OrientationScore u;
  u.width = w;
  u.height = h;
  u.n_orient = stack.n_orient;
  u.thetas = stack.thetas;
  u.layers.assign(stack.n_orient, std::vector<cplx>(static_cast<size_t>(w) * h));
  const double scale = 1.0 / std::sqrt(static_cast<double>(w) * h);
  for (int i = 0; i < stack.n_orient; ++i) {
    const auto& psi = stack.spatial[i];
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        cplx acc = 0.0;
        for (int dy = 0; dy < h; ++dy)
          for (int dx = 0; dx < w; ++dx)
            acc += std::conj(psi[static_cast<size_t>(dy) * w + dx]) *
                   f.data[static_cast<size_t>((y + dy) % h) * w + (x + dx) % w];
        u.layers[i][static_cast<size_t>(y) * w + x] = acc * scale;
      }
  }
  return u;
}

OrientationScore transform_serial(const Image2D& f, const WaveletStack& stack) {
  if (f.width != stack.width || f.height != stack.height)
    throw Error(ErrorCode::DimError, "image and kernel stack dimensions differ");
  OrientationScore u;
  u.width = f.width;
  u.height = f.height;
  u.n_orient = stack.n_orient;
  u.thetas = stack.thetas;
  u.layers.resize(stack.n_orient);
  std::vector<cplx> fc(f.data.begin(), f.data.end());
  const Spectrum2D fhat = fft2(fc, f.width, f.height);
  for (int i = 0; i < stack.n_orient; ++i) {
    Spectrum2D prod(u.width, u.height);
    const auto& k = stack.fourier[i].data;
    for (size_t b = 0; b < k.size(); ++b) prod.data[b] = std::conj(k[b]) * fhat.data[b];
    u.layers[i] = ifft2(prod);
  }
  return u;
}

Image2D gaussian_blur_direct(const Image2D& f, double sigma, Boundary boundary) {
  if (sigma <= 0.0) return f;
  const int r = static_cast<int>(std::ceil(6.0 * sigma));
  std::vector<double> k(2 * r + 1);
  for (int i = -r; i <= r; ++i)
    k[i + r] = std::exp(-0.5 * i * i / (sigma * sigma)) / (std::sqrt(kTwoPi) * sigma);

  auto wrap = [&](int i, int n) {
    if (boundary == Boundary::Periodic) return ((i % n) + n) % n;
    // Mirror with whole-sample reflection matching the doubled-grid transform.
    int p = ((i % (2 * n)) + 2 * n) % (2 * n);
    return p < n ? p : 2 * n - 1 - p;
  };

  Image2D tmp = f, out = f;
  for (int y = 0; y < f.height; ++y)
    for (int x = 0; x < f.width; ++x) {
      double acc = 0.0;
      for (int i = -r; i <= r; ++i)
        acc += k[i + r] * f.data[static_cast<size_t>(y) * f.width + wrap(x + i, f.width)];
      tmp.data[static_cast<size_t>(y) * f.width + x] = acc;
    }
  for (int y = 0; y < f.height; ++y)
    for (int x = 0; x < f.width; ++x) {
      double acc = 0.0;
      for (int i = -r; i <= r; ++i)
        acc += k[i + r] * tmp.data[static_cast<size_t>(wrap(y + i, f.height)) * f.width + x];
      out.data[static_cast<size_t>(y) * f.width + x] = acc;
    }
  return out;
}

}  // namespace orientrace
