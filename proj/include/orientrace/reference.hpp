#pragma once

// Slow, obviously-correct counterparts of the production kernels. The direct
// O(N^4) DFT and spatial correlation pin down the FFT path on small grids;
// the serial transform is the same algorithm as transform() minus threading,
// so the two must agree bitwise for every thread count.

#include "orientrace/oscore.hpp"
#include "orientrace/preprocess.hpp"

namespace orientrace {

// Direct unitary DFT (sign = -1) / inverse (sign = +1).
Spectrum2D dft2_direct(const std::vector<cplx>& in, int width, int height, int sign);

// Circular cross-correlation with each kernel, including the 1/sqrt(W*H)
// factor the unitary convolution theorem introduces, summed directly.
OrientationScore transform_direct(const Image2D& f, const WaveletStack& stack);

// transform() with all parallel loops replaced by plain serial ones.
OrientationScore transform_serial(const Image2D& f, const WaveletStack& stack);

// Truncated sampled-Gaussian convolution (radius ceil(6 sigma)).
Image2D gaussian_blur_direct(const Image2D& f, double sigma, Boundary boundary);

}  // namespace orientrace
