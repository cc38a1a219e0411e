#pragma once

// Photometric preprocessing for fundus-style images: large-scale luminosity
// drift subtraction and DC removal. After remove_dc dark vessels carry
// negative values, which the wavelet sign conventions downstream rely on.

#include "orientrace/image.hpp"

namespace orientrace {

struct PreprocessParams {
  double luminosity_sigma = 32.0;
  Boundary boundary = Boundary::Mirror;
  bool normalize_first = true;  // luminosity correction before DC removal
};

// f - G_sigma * f. The drift estimate is the large-scale Gaussian blur.
Image2D normalize_luminosity(const Image2D& im, double sigma, Boundary boundary = Boundary::Mirror);

// Subtracts the (mask-restricted) mean; outside-mask pixels are zeroed.
// Throws Error{EmptyMask} when the mask has no inside pixels.
Image2D remove_dc(const Image2D& im);

Image2D preprocess(const Image2D& im, const PreprocessParams& p);

}  // namespace orientrace
