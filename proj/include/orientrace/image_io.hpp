#pragma once

// Image file I/O. PNG via libpng, PGM/PPM hand-rolled. Loaded samples map
// linearly to [0,1] by 1/maxval (255 or 65535). 8-bit PGM round trips
// bit-exactly.

#include <string>

#include "orientrace/image.hpp"

namespace orientrace {

enum class Channel { Gray, Red, Green, Blue };

// Loads PNG/PGM/PPM by extension sniffing the magic bytes. For color inputs
// the requested channel is extracted; Gray averages RGB. Throws
// Error{NotFound} for missing files, Error{FormatError} for bad content.
Image2D load_image(const std::string& path, Channel channel = Channel::Gray);

// Attaches a mask from a second image (nonzero = inside).
void attach_mask(Image2D& im, const Image2D& mask_im);

void save_pgm(const std::string& path, const Image2D& im);          // 8-bit
void save_png_gray16(const std::string& path, const Image2D& im);   // 16-bit gray
void save_png_rgb(const std::string& path, const std::vector<uint8_t>& rgb, int w, int h);

}  // namespace orientrace
