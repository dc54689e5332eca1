// Benchmark: serial reference likelihood kernels vs the chunked OpenMP
// versions, plus a bitwise agreement check over the cases timed.
//
//   bench_kernels [n] [d] [reps]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "pricing/dataset.hpp"
#include "pricing/glm.hpp"
#include "pricing/kernels.hpp"
#include "pricing/rng.hpp"

using namespace pricing;

namespace {

Dataset sample_rows(Family fam, long n, int d, Rng& rng) {
  Dataset data(d);
  Vector theta = Vector::Zero(d);
  for (int j = 0; j < d; ++j) theta[j] = rng.uniform(-0.3, 0.3);
  theta[d - 1] = -0.4;
  Vector z(d - 1);
  for (long i = 1; i <= n; ++i) {
    z[0] = 1.0;
    for (int j = 1; j < d - 1; ++j) z[j] = rng.uniform();
    double p = rng.uniform(1.0, 15.0);
    data.append(z, p, sample_demand(fam, theta, z, p, rng), i);
  }
  return data;
}

template <class F>
double time_ms(int reps, F&& fn) {
  auto t0 = std::chrono::steady_clock::now();
  for (int r = 0; r < reps; ++r) fn();
  auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

const char* family_name(Family fam) {
  switch (fam) {
    case Family::Gaussian: return "gaussian";
    case Family::Logistic: return "logistic";
    default: return "poisson";
  }
}

}  // namespace

int main(int argc, char** argv) {
  long n = argc > 1 ? std::atol(argv[1]) : 200000;
  int d = argc > 2 ? std::atoi(argv[2]) : 50;
  int reps = argc > 3 ? std::atoi(argv[3]) : 20;

#ifdef _OPENMP
  std::printf("threads: %d\n", omp_get_max_threads());
#else
  std::printf("threads: 1 (OpenMP off)\n");
#endif
  std::printf("n=%ld d=%d reps=%d\n\n", n, d, reps);
  std::printf("%-9s %-8s %12s %12s %8s  %s\n", "family", "kernel",
              "serial(ms)", "chunked(ms)", "speedup", "bitwise");

  Rng rng(42);
  bool all_equal = true;
  for (Family fam : {Family::Gaussian, Family::Logistic, Family::Poisson}) {
    Dataset data = sample_rows(fam, n, d, rng);
    DataView view = data.view();
    Vector theta = Vector::Zero(d);
    for (int j = 0; j < d; ++j) theta[j] = rng.uniform(-0.2, 0.2);
    theta[d - 1] = -0.3;

    double vs = 0, vc = 0;
    double ts = time_ms(reps, [&] { vs = nll_serial(fam, view, theta); });
    double tc = time_ms(reps, [&] { vc = nll_chunked(fam, view, theta); });
    bool eq = std::memcmp(&vs, &vc, sizeof vs) == 0;
    all_equal &= eq;
    std::printf("%-9s %-8s %12.3f %12.3f %7.2fx  %s\n", family_name(fam),
                "nll", ts, tc, ts / tc, eq ? "yes" : "NO");

    Vector gs(d), gc(d);
    ts = time_ms(reps, [&] { vs = nll_grad_serial(fam, view, theta, gs); });
    tc = time_ms(reps, [&] { vc = nll_grad_chunked(fam, view, theta, gc); });
    eq = std::memcmp(&vs, &vc, sizeof vs) == 0 &&
         std::memcmp(gs.data(), gc.data(), size_t(d) * sizeof(double)) == 0;
    all_equal &= eq;
    std::printf("%-9s %-8s %12.3f %12.3f %7.2fx  %s\n", family_name(fam),
                "grad", ts, tc, ts / tc, eq ? "yes" : "NO");
  }

  if (!all_equal) {
    std::printf("\nFAIL: serial and chunked kernels disagree\n");
    return 1;
  }
  std::printf("\nall kernels bitwise identical\n");
  return 0;
}
