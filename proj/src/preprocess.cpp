#include "orientrace/preprocess.hpp"

#include "orientrace/spectral.hpp"

namespace orientrace {

Image2D normalize_luminosity(const Image2D& im, double sigma, Boundary boundary) {
  if (sigma <= 0.0) return im;
  Image2D drift = gaussian_blur(im, sigma, boundary);
  Image2D out = im;
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] -= drift.data[i];
  return out;
}

Image2D remove_dc(const Image2D& im) {
  Image2D out = im;
  if (im.mask.empty()) {
    const double m = im.mean();
    for (double& v : out.data) v -= m;
    return out;
  }
  double sum = 0.0;
  size_t count = 0;
  for (size_t i = 0; i < im.data.size(); ++i) {
    if (im.mask[i]) {
      sum += im.data[i];
      ++count;
    }
  }
  if (count == 0) throw Error(ErrorCode::EmptyMask, "mask has no inside pixels");
  const double m = sum / count;
  for (size_t i = 0; i < im.data.size(); ++i)
    out.data[i] = im.mask[i] ? im.data[i] - m : 0.0;
  return out;
}

Image2D preprocess(const Image2D& im, const PreprocessParams& p) {
  if (p.normalize_first)
    return remove_dc(normalize_luminosity(im, p.luminosity_sigma, p.boundary));
  Image2D dc = remove_dc(im);
  return normalize_luminosity(dc, p.luminosity_sigma, p.boundary);
}

}  // namespace orientrace
