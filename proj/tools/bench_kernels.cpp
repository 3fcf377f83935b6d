// Times the OpenMP kernels against their serial references and checks that
// both produce bit-identical results on the benchmark shapes.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <random>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "asa/kernels.hpp"
#include "asa/util.hpp"

using asa::uniform_range;
namespace k = asa::kernels;

namespace {

using clock_type = std::chrono::steady_clock;

template <typename F>
double time_ms(F&& fn, int reps) {
  fn();  // warm up
  auto t0 = clock_type::now();
  for (int r = 0; r < reps; ++r) fn();
  auto t1 = clock_type::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

std::vector<float> random_vec(size_t n, std::mt19937_64& rng) {
  std::vector<float> v(n);
  for (auto& x : v) x = float(uniform_range(rng, -1.0, 1.0));
  return v;
}

bool bit_equal(const std::vector<float>& a, const std::vector<float>& b) {
  return std::equal(a.begin(), a.end(), b.begin(), b.end(),
                    [](float x, float y) { return std::memcmp(&x, &y, sizeof x) == 0; });
}

void row(const char* name, double serial_ms, double omp_ms, bool exact) {
  std::printf("%-28s %10.3f ms %10.3f ms %8.2fx   %s\n", name, serial_ms, omp_ms,
              serial_ms / omp_ms, exact ? "bit-identical" : "MISMATCH");
}

}  // namespace

int main() {
#ifdef _OPENMP
  std::printf("OpenMP enabled, max threads: %d\n\n", omp_get_max_threads());
#else
  std::printf("OpenMP disabled (serial build)\n\n");
#endif
  std::printf("%-28s %13s %13s %9s\n", "kernel", "serial", "omp", "speedup");

  std::mt19937_64 rng(7);
  {
    const int M = 256, K = 384, N = 256;
    auto a = random_vec(size_t(M) * K, rng), b = random_vec(size_t(K) * N, rng);
    std::vector<float> c1(size_t(M) * N), c2(c1.size());
    double ts = time_ms([&] { k::serial::matmul_nn(a.data(), b.data(), c1.data(), M, K, N); }, 5);
    double tp = time_ms([&] { k::matmul_nn(a.data(), b.data(), c2.data(), M, K, N); }, 5);
    row("matmul_nn 256x384x256", ts, tp, bit_equal(c1, c2));
  }
  {
    const int M = 256, K = 384, N = 256;
    auto a = random_vec(size_t(M) * K, rng), b = random_vec(size_t(N) * K, rng);
    std::vector<float> c1(size_t(M) * N), c2(c1.size());
    double ts = time_ms([&] { k::serial::matmul_nt(a.data(), b.data(), c1.data(), M, K, N); }, 5);
    double tp = time_ms([&] { k::matmul_nt(a.data(), b.data(), c2.data(), M, K, N); }, 5);
    row("matmul_nt 256x384x256", ts, tp, bit_equal(c1, c2));
  }
  {
    const int M = 256, K = 384, N = 256;
    auto a = random_vec(size_t(K) * M, rng), b = random_vec(size_t(K) * N, rng);
    std::vector<float> c1(size_t(M) * N), c2(c1.size());
    double ts = time_ms([&] { k::serial::matmul_tn(a.data(), b.data(), c1.data(), M, K, N); }, 5);
    double tp = time_ms([&] { k::matmul_tn(a.data(), b.data(), c2.data(), M, K, N); }, 5);
    row("matmul_tn 256x384x256", ts, tp, bit_equal(c1, c2));
  }
  {
    const int R = 4096, C = 263;
    auto x = random_vec(size_t(R) * C, rng);
    std::vector<float> y1(x.size()), y2(x.size());
    double ts = time_ms([&] { k::serial::softmax_rows(x.data(), y1.data(), R, C); }, 10);
    double tp = time_ms([&] { k::softmax_rows(x.data(), y2.data(), R, C); }, 10);
    row("softmax_rows 4096x263", ts, tp, bit_equal(y1, y2));
  }
  {
    const int R = 4096, C = 263;
    auto x = random_vec(size_t(R) * C, rng);
    auto gain = random_vec(C, rng);
    std::vector<float> y1(x.size()), y2(x.size());
    double ts = time_ms(
        [&] { k::serial::rms_norm_rows(x.data(), gain.data(), y1.data(), R, C, 1e-5f); }, 10);
    double tp =
        time_ms([&] { k::rms_norm_rows(x.data(), gain.data(), y2.data(), R, C, 1e-5f); }, 10);
    row("rms_norm_rows 4096x263", ts, tp, bit_equal(y1, y2));
  }
  return 0;
}
