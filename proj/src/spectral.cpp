#include "orientrace/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cassert>
#include <map>
#include <mutex>

#include "orientrace/parallel.hpp"

namespace orientrace {

namespace {

// FFTW plan creation is not thread-safe; execution through the new-array
// interface is. Plans are cached per (w, h, sign) and reused on caller
// buffers (fftw_malloc alignment, in != out).
class PlanCache {
 public:
  fftw_plan get2d(int w, int h, int sign) {
    std::lock_guard<std::mutex> lock(mu_);
    const Key key{w, h, sign};
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
    fftw_complex* in = fftw_alloc_complex(static_cast<size_t>(w) * h);
    fftw_complex* out = fftw_alloc_complex(static_cast<size_t>(w) * h);
    // Row-major (h, w): FFTW wants the slowest dimension first.
    fftw_plan p = fftw_plan_dft_2d(h, w, in, out, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(in);
    fftw_free(out);
    plans_.emplace(key, p);
    return p;
  }

  fftw_plan get1d(int n, int sign) {
    std::lock_guard<std::mutex> lock(mu_);
    const Key key{n, 0, sign};
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
    fftw_complex* in = fftw_alloc_complex(n);
    fftw_complex* out = fftw_alloc_complex(n);
    fftw_plan p = fftw_plan_dft_1d(n, in, out, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(in);
    fftw_free(out);
    plans_.emplace(key, p);
    return p;
  }

 private:
  struct Key {
    int a, b, sign;
    bool operator<(const Key& o) const {
      return std::tie(a, b, sign) < std::tie(o.a, o.b, o.sign);
    }
  };
  std::mutex mu_;
  std::map<Key, fftw_plan> plans_;
};

PlanCache& cache() {
  static PlanCache c;
  return c;
}

void run2d(const cplx* in, cplx* out, int w, int h, int sign) {
  fftw_plan p = cache().get2d(w, h, sign);
  fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in)),
                   reinterpret_cast<fftw_complex*>(out));
  const double s = 1.0 / std::sqrt(static_cast<double>(w) * h);
  const size_t n = static_cast<size_t>(w) * h;
  for (size_t i = 0; i < n; ++i) out[i] *= s;
}

void run1d(const cplx* in, cplx* out, int n, int sign) {
  fftw_plan p = cache().get1d(n, sign);
  fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in)),
                   reinterpret_cast<fftw_complex*>(out));
  const double s = 1.0 / std::sqrt(static_cast<double>(n));
  for (int i = 0; i < n; ++i) out[i] *= s;
}

}  // namespace

Spectrum2D fft2(const std::vector<cplx>& in, int w, int h) {
  if (static_cast<size_t>(w) * h != in.size())
    throw Error(ErrorCode::DimError, "fft2: buffer size mismatch");
  Spectrum2D s(w, h);
  run2d(in.data(), s.data.data(), w, h, FFTW_FORWARD);
  return s;
}

std::vector<cplx> ifft2(const Spectrum2D& s) {
  std::vector<cplx> out(s.data.size());
  run2d(s.data.data(), out.data(), s.width, s.height, FFTW_BACKWARD);
  return out;
}

Spectrum2D fft2(const Image2D& im) {
  std::vector<cplx> buf(im.data.size());
  for (size_t i = 0; i < im.data.size(); ++i) buf[i] = im.data[i];
  return fft2(buf, im.width, im.height);
}

Image2D ifft2_real(const Spectrum2D& s) {
  const std::vector<cplx> buf = ifft2(s);
  Image2D im(s.width, s.height);
  for (size_t i = 0; i < buf.size(); ++i) im.data[i] = buf[i].real();
  return im;
}

std::vector<cplx> fft1(const std::vector<cplx>& in) {
  std::vector<cplx> out(in.size());
  run1d(in.data(), out.data(), static_cast<int>(in.size()), FFTW_FORWARD);
  return out;
}

std::vector<cplx> ifft1(const std::vector<cplx>& in) {
  std::vector<cplx> out(in.size());
  run1d(in.data(), out.data(), static_cast<int>(in.size()), FFTW_BACKWARD);
  return out;
}

namespace {

Image2D gaussian_blur_periodic(const Image2D& im, double sigma) {
  Spectrum2D s = fft2(im);
  for (int ky = 0; ky < s.height; ++ky) {
    const double wy = bin_freq(ky, s.height);
    for (int kx = 0; kx < s.width; ++kx) {
      const double wx = bin_freq(kx, s.width);
      s.at(kx, ky) *= std::exp(-0.5 * sigma * sigma * (wx * wx + wy * wy));
    }
  }
  return ifft2_real(s);
}

}  // namespace

Image2D gaussian_blur(const Image2D& im, double sigma, Boundary boundary) {
  if (sigma <= 0.0) return im;
  if (boundary == Boundary::Periodic) return gaussian_blur_periodic(im, sigma);
  // Mirror: reflect into a 2w x 2h periodic tile, blur, crop.
  Image2D big(2 * im.width, 2 * im.height);
  for (int y = 0; y < 2 * im.height; ++y) {
    const int sy = y < im.height ? y : 2 * im.height - 1 - y;
    for (int x = 0; x < 2 * im.width; ++x) {
      const int sx = x < im.width ? x : 2 * im.width - 1 - x;
      big.at(x, y) = im.at(sx, sy);
    }
  }
  big = gaussian_blur_periodic(big, sigma);
  Image2D out(im.width, im.height);
  for (int y = 0; y < im.height; ++y)
    for (int x = 0; x < im.width; ++x) out.at(x, y) = big.at(x, y);
  return out;
}

std::vector<double> gaussian_blur_1d(const std::vector<double>& f, double sigma,
                                     Boundary boundary) {
  if (sigma <= 0.0 || f.size() < 2) return f;
  const int n = static_cast<int>(f.size());
  std::vector<cplx> buf;
  if (boundary == Boundary::Mirror) {
    buf.resize(2 * n);
    for (int i = 0; i < n; ++i) buf[i] = f[i];
    for (int i = 0; i < n; ++i) buf[n + i] = f[n - 1 - i];
  } else {
    buf.assign(f.begin(), f.end());
  }
  const int m = static_cast<int>(buf.size());
  std::vector<cplx> hat = fft1(buf);
  for (int k = 0; k < m; ++k) {
    const double w = bin_freq(k, m);
    hat[k] *= std::exp(-0.5 * sigma * sigma * w * w);
  }
  buf = ifft1(hat);
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) out[i] = buf[i].real();
  return out;
}

ScaleSpace1D scale_space_1d(const std::vector<double>& profile, const ScaleLadder& ladder) {
  if (ladder.levels < 8) throw Error(ErrorCode::ParamError, "scale ladder too short");
  if (ladder.t0 <= 0 || ladder.ratio <= 1.0)
    throw Error(ErrorCode::ParamError, "scale ladder must be geometric and increasing");
  ScaleSpace1D ss;
  ss.scales = ladder.scales();
  ss.levels.resize(ss.scales.size());
  ss.levels[0] = profile;
  for (size_t i = 1; i < ss.scales.size(); ++i)
    ss.levels[i] = gaussian_blur_1d(profile, std::sqrt(ss.scales[i]), Boundary::Mirror);
  return ss;
}

std::vector<Extremum> local_extrema_1d(const std::vector<double>& f) {
  std::vector<Extremum> out;
  const int n = static_cast<int>(f.size());
  for (int i = 1; i + 1 < n; ++i) {
    const bool mx = f[i] > f[i - 1] && f[i] > f[i + 1];
    const bool mn = f[i] < f[i - 1] && f[i] < f[i + 1];
    if (!mx && !mn) continue;
    // Parabolic sub-sample refinement.
    const double denom = f[i - 1] - 2 * f[i] + f[i + 1];
    double d = 0.0;
    if (std::abs(denom) > 1e-300) d = 0.5 * (f[i - 1] - f[i + 1]) / denom;
    if (d > 0.5) d = 0.5;
    if (d < -0.5) d = -0.5;
    out.push_back({i + d, f[i], mx});
  }
  return out;
}

ScaleTracks toppoints_1d(const ScaleSpace1D& ss) {
  ScaleTracks result;
  std::vector<Extremum> cur = local_extrema_1d(ss.levels[0]);
  for (const Extremum& e : cur) {
    ExtremumTrack t;
    t.seed = e;
    t.positions = {e.pos};
    t.last_level = 0;
    result.tracks.push_back(std::move(t));
  }
  std::vector<int> alive(cur.size());
  for (size_t i = 0; i < cur.size(); ++i) alive[i] = static_cast<int>(i);

  for (size_t lvl = 1; lvl < ss.levels.size(); ++lvl) {
    const std::vector<Extremum> next = local_extrema_1d(ss.levels[lvl]);
    const double dt = ss.scales[lvl] - ss.scales[lvl - 1];
    const double radius = 2.0 * std::sqrt(dt);
    std::vector<int> taken(next.size(), -1);
    std::vector<int> still_alive;
    std::vector<int> died;

    for (int ti : alive) {
      ExtremumTrack& tr = result.tracks[ti];
      const double p = tr.positions.back();
      int best = -1;
      double best_d = radius;
      for (size_t j = 0; j < next.size(); ++j) {
        if (taken[j] >= 0 || next[j].is_max != tr.seed.is_max) continue;
        const double d = std::abs(next[j].pos - p);
        if (d <= best_d) {
          best_d = d;
          best = static_cast<int>(j);
        }
      }
      if (best >= 0) {
        taken[best] = ti;
        tr.positions.push_back(next[best].pos);
        tr.last_level = static_cast<int>(lvl);
        still_alive.push_back(ti);
      } else {
        tr.death_scale = ss.scales[lvl];
        died.push_back(ti);
      }
    }

    // Group adjacent deaths into annihilation events (a min/max pair merging
    // produces one toppoint at the midpoint of their last positions).
    std::sort(died.begin(), died.end(), [&](int a, int b) {
      return result.tracks[a].positions.back() < result.tracks[b].positions.back();
    });
    for (size_t i = 0; i < died.size();) {
      size_t j = i + 1;
      double pos_sum = result.tracks[died[i]].positions.back();
      int cnt = 1;
      while (j < died.size() &&
             std::abs(result.tracks[died[j]].positions.back() -
                      result.tracks[died[j - 1]].positions.back()) <= 2.0 * radius) {
        pos_sum += result.tracks[died[j]].positions.back();
        ++cnt;
        ++j;
      }
      result.toppoints.push_back({pos_sum / cnt, ss.scales[lvl], false});
      i = j;
    }
    alive = std::move(still_alive);
  }

  for (int ti : alive) {
    result.tracks[ti].persisted = true;
    result.tracks[ti].death_scale = ss.scales.back();
  }
  return result;
}

std::vector<double> hilbert_1d(const std::vector<double>& f) {
  const int n = static_cast<int>(f.size());
  std::vector<cplx> buf(f.begin(), f.end());
  std::vector<cplx> hat = fft1(buf);
  for (int k = 0; k < n; ++k) {
    if (k == 0 || (n % 2 == 0 && k == n / 2)) {
      hat[k] = 0.0;
    } else if (k < (n + 1) / 2) {
      hat[k] *= cplx(0.0, 1.0);
    } else {
      hat[k] *= cplx(0.0, -1.0);
    }
  }
  buf = ifft1(hat);
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) out[i] = buf[i].real();
  return out;
}

Spectrum2D hilbert_multiplier_2d(const Spectrum2D& s, double theta) {
  Spectrum2D out = s;
  const Vec2 eta = frame_eta(theta);
  for (int ky = 0; ky < s.height; ++ky) {
    const double wy = bin_freq(ky, s.height);
    for (int kx = 0; kx < s.width; ++kx) {
      const double wx = bin_freq(kx, s.width);
      const double d = wx * eta.x + wy * eta.y;
      const double sg = d > 1e-12 ? 1.0 : (d < -1e-12 ? -1.0 : 0.0);
      out.at(kx, ky) *= cplx(0.0, sg);
    }
  }
  return out;
}

}  // namespace orientrace
