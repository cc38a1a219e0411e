#include "orientrace/image_io.hpp"

#include <png.h>

#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>

namespace orientrace {

namespace {

double pick_channel(Channel ch, double r, double g, double b) {
  switch (ch) {
    case Channel::Red: return r;
    case Channel::Green: return g;
    case Channel::Blue: return b;
    case Channel::Gray: default: return (r + g + b) / 3.0;
  }
}

struct FileCloser {
  void operator()(std::FILE* f) const { if (f) std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

Image2D load_png(const std::string& path, Channel channel) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw Error(ErrorCode::NotFound, "cannot open " + path);

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::FormatError, "libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::FormatError, "bad PNG: " + path);
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);

  const int w = static_cast<int>(png_get_image_width(png, info));
  const int h = static_cast<int>(png_get_image_height(png, info));
  const int color = png_get_color_type(png, info);
  int depth = png_get_bit_depth(png, info);

  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (depth == 16) png_set_swap(png);  // little-endian rows
  png_read_update_info(png, info);
  depth = png_get_bit_depth(png, info);

  const int channels = png_get_channels(png, info);
  const size_t rowbytes = png_get_rowbytes(png, info);
  std::vector<uint8_t> buf(rowbytes * h);
  std::vector<png_bytep> rows(h);
  for (int y = 0; y < h; ++y) rows[y] = buf.data() + rowbytes * y;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  Image2D im(w, h);
  const double scale = depth == 16 ? 1.0 / 65535.0 : 1.0 / 255.0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double v[4] = {0, 0, 0, 0};
      for (int c = 0; c < channels && c < 4; ++c) {
        if (depth == 16) {
          const uint16_t* p = reinterpret_cast<const uint16_t*>(rows[y]);
          v[c] = p[x * channels + c] * scale;
        } else {
          v[c] = rows[y][x * channels + c] * scale;
        }
      }
      im.at(x, y) = channels >= 3 ? pick_channel(channel, v[0], v[1], v[2]) : v[0];
    }
  }
  return im;
}

void skip_pnm_space(std::istream& in) {
  for (;;) {
    int c = in.peek();
    if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else if (std::isspace(c)) {
      in.get();
    } else {
      return;
    }
  }
}

int read_pnm_int(std::istream& in) {
  skip_pnm_space(in);
  int v = -1;
  in >> v;
  if (!in || v < 0) throw Error(ErrorCode::FormatError, "bad PNM header");
  return v;
}

Image2D load_pnm(const std::string& path, Channel channel) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::NotFound, "cannot open " + path);
  char magic[2] = {0, 0};
  in.read(magic, 2);
  if (magic[0] != 'P') throw Error(ErrorCode::FormatError, "not a PNM file: " + path);
  const char kind = magic[1];
  const bool ascii = kind == '2' || kind == '3';
  const bool color = kind == '3' || kind == '6';
  if (kind != '2' && kind != '3' && kind != '5' && kind != '6')
    throw Error(ErrorCode::FormatError, "unsupported PNM kind: " + path);

  const int w = read_pnm_int(in);
  const int h = read_pnm_int(in);
  const int maxval = read_pnm_int(in);
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 65535)
    throw Error(ErrorCode::FormatError, "bad PNM dimensions: " + path);

  Image2D im(w, h);
  const int nch = color ? 3 : 1;
  const double scale = 1.0 / maxval;
  if (ascii) {
    for (int i = 0; i < w * h; ++i) {
      double v[3] = {0, 0, 0};
      for (int c = 0; c < nch; ++c) v[c] = read_pnm_int(in) * scale;
      im.data[i] = color ? pick_channel(channel, v[0], v[1], v[2]) : v[0];
    }
  } else {
    in.get();  // single whitespace after maxval
    const int bytes = maxval > 255 ? 2 : 1;
    std::vector<uint8_t> buf(static_cast<size_t>(w) * h * nch * bytes);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!in) throw Error(ErrorCode::FormatError, "truncated PNM data: " + path);
    for (int i = 0; i < w * h; ++i) {
      double v[3] = {0, 0, 0};
      for (int c = 0; c < nch; ++c) {
        const size_t off = (static_cast<size_t>(i) * nch + c) * bytes;
        const int raw = bytes == 2 ? (buf[off] << 8) | buf[off + 1] : buf[off];
        v[c] = raw * scale;
      }
      im.data[i] = color ? pick_channel(channel, v[0], v[1], v[2]) : v[0];
    }
  }
  return im;
}

}  // namespace

Image2D load_image(const std::string& path, Channel channel) {
  std::ifstream probe(path, std::ios::binary);
  if (!probe) throw Error(ErrorCode::NotFound, "cannot open " + path);
  unsigned char sig[8] = {0};
  probe.read(reinterpret_cast<char*>(sig), 8);
  probe.close();
  if (sig[0] == 0x89 && sig[1] == 'P' && sig[2] == 'N' && sig[3] == 'G')
    return load_png(path, channel);
  if (sig[0] == 'P') return load_pnm(path, channel);
  throw Error(ErrorCode::FormatError, "unrecognized image format: " + path);
}

void attach_mask(Image2D& im, const Image2D& mask_im) {
  if (mask_im.width != im.width || mask_im.height != im.height)
    throw Error(ErrorCode::DimError, "mask dimensions do not match image");
  im.mask.resize(im.data.size());
  for (size_t i = 0; i < im.data.size(); ++i) im.mask[i] = mask_im.data[i] > 0 ? 1 : 0;
}

void save_pgm(const std::string& path, const Image2D& im) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::NotFound, "cannot write " + path);
  out << "P5\n" << im.width << " " << im.height << "\n255\n";
  std::vector<uint8_t> row(im.width);
  for (int y = 0; y < im.height; ++y) {
    for (int x = 0; x < im.width; ++x) {
      double v = im.at(x, y);
      v = v < 0 ? 0 : (v > 1 ? 1 : v);
      row[x] = static_cast<uint8_t>(std::lround(v * 255.0));
    }
    out.write(reinterpret_cast<const char*>(row.data()), im.width);
  }
}

namespace {

void save_png_impl(const std::string& path, int w, int h, int depth, int color_type,
                   const std::vector<png_bytep>& rows) {
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw Error(ErrorCode::NotFound, "cannot write " + path);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::FormatError, "libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::FormatError, "PNG write failed: " + path);
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, w, h, depth, color_type, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, const_cast<png_bytep*>(rows.data()));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace

void save_png_gray16(const std::string& path, const Image2D& im) {
  std::vector<uint8_t> buf(static_cast<size_t>(im.width) * im.height * 2);
  for (int y = 0; y < im.height; ++y) {
    for (int x = 0; x < im.width; ++x) {
      double v = im.at(x, y);
      v = v < 0 ? 0 : (v > 1 ? 1 : v);
      const uint16_t q = static_cast<uint16_t>(std::lround(v * 65535.0));
      const size_t off = (static_cast<size_t>(y) * im.width + x) * 2;
      buf[off] = static_cast<uint8_t>(q >> 8);  // network byte order
      buf[off + 1] = static_cast<uint8_t>(q & 0xff);
    }
  }
  std::vector<png_bytep> rows(im.height);
  for (int y = 0; y < im.height; ++y)
    rows[y] = buf.data() + static_cast<size_t>(y) * im.width * 2;
  save_png_impl(path, im.width, im.height, 16, PNG_COLOR_TYPE_GRAY, rows);
}

void save_png_rgb(const std::string& path, const std::vector<uint8_t>& rgb, int w, int h) {
  if (rgb.size() != static_cast<size_t>(w) * h * 3)
    throw Error(ErrorCode::DimError, "rgb buffer size mismatch");
  std::vector<png_bytep> rows(h);
  for (int y = 0; y < h; ++y)
    rows[y] = const_cast<png_bytep>(rgb.data() + static_cast<size_t>(y) * w * 3);
  save_png_impl(path, w, h, 8, PNG_COLOR_TYPE_RGB, rows);
}

}  // namespace orientrace
