// Timing harness: OpenMP transform vs the serial reference, and the FFT
// path vs direct circular correlation on a small grid.

#include <chrono>
#include <iostream>

#include "orientrace/preprocess.hpp"
#include "orientrace/phantom.hpp"
#include "orientrace/reference.hpp"

using namespace orientrace;

namespace {

template <typename F>
double time_ms(F&& f, int reps) {
  // One warm-up pass so FFTW plan creation is not billed to either side.
  f();
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < reps; ++i) f();
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

}  // namespace

int main(int argc, char** argv) {
  int size = 256;
  int reps = 5;
  if (argc > 1) size = std::atoi(argv[1]);
  if (argc > 2) reps = std::atoi(argv[2]);
  if (size < 16 || size % 2 != 0 || reps < 1) {
    std::cerr << "usage: orientrace-bench [even size >= 16] [reps >= 1]\n";
    return 2;
  }

  const Image2D f = remove_dc(phantom::render(phantom::scene_crossing(size)));
  CakeParams p;
  const WaveletStack stack = build_cake_stack(size, size, p);

  std::cout << "grid " << size << "x" << size << ", " << p.n_orient << " orientations, " << reps
            << " reps\n";

  set_thread_count(1);
  const double t_serial = time_ms([&] { transform_serial(f, stack); }, reps);
  std::cout << "transform_serial      " << t_serial << " ms\n";

  const double t_omp1 = time_ms([&] { transform(f, stack); }, reps);
  std::cout << "transform (1 thread)  " << t_omp1 << " ms\n";

  set_thread_count(0);
  const double t_omp = time_ms([&] { transform(f, stack); }, reps);
  std::cout << "transform (default)   " << t_omp << " ms  (x" << t_serial / t_omp
            << " vs serial)\n";

  // Direct O(N^4) correlation at a size where it is tolerable.
  const int small = 32;
  const Image2D g = remove_dc(phantom::render(phantom::scene_crossing(small)));
  CakeParams ps;
  ps.n_orient = 8;
  const WaveletStack small_stack = build_cake_stack(small, small, ps);
  const double t_fft = time_ms([&] { transform(g, small_stack); }, reps);
  const double t_direct = time_ms([&] { transform_direct(g, small_stack); }, 1);
  std::cout << "small grid " << small << "x" << small << ": fft " << t_fft << " ms, direct "
            << t_direct << " ms (x" << t_direct / t_fft << ")\n";
  return 0;
}
