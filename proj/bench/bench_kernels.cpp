// Timing harness comparing the serial reference kernels against their
// OpenMP versions: dense products, sample-covariance accumulation, the
// per-mode chain sweep, and an embarrassingly parallel Monte Carlo loop.

#include <chrono>
#include <cstdio>
#include <functional>
#include <vector>

#include "hmccond/kernels.hpp"
#include "hmccond/randmat.hpp"
#include "hmccond/rng.hpp"
#include "hmccond/sampler.hpp"
#include "hmccond/spectra.hpp"

using namespace hmccond;
using kernels::Exec;

namespace {

double time_of(const std::function<void()>& fn, int reps) {
  using clock = std::chrono::steady_clock;
  fn();  // warm up
  const auto t0 = clock::now();
  for (int r = 0; r < reps; ++r) fn();
  const auto t1 = clock::now();
  return std::chrono::duration<double>(t1 - t0).count() / reps;
}

void report(const char* name, double serial_s, double parallel_s) {
  std::printf("%-28s serial %9.4f ms   openmp %9.4f ms   speedup %5.2fx\n", name,
              serial_s * 1e3, parallel_s * 1e3, serial_s / parallel_s);
}

}  // namespace

int main() {
  std::printf("threads available: %d\n", kernels::max_threads());

  {
    const int n = 384;
    Rng rng(1);
    Matrix a(n, n), b(n, n);
    rng.fill_normal(a.data(), static_cast<std::size_t>(n) * n);
    rng.fill_normal(b.data(), static_cast<std::size_t>(n) * n);
    const double ts = time_of([&] { kernels::matmul(a, b, Exec::serial); }, 5);
    const double tp = time_of([&] { kernels::matmul(a, b, Exec::parallel); }, 5);
    report("matmul 384x384", ts, tp);
  }

  {
    const int n = 256, s = 2048;
    Rng rng(2);
    Matrix x(s, n);
    rng.fill_normal(x.data(), static_cast<std::size_t>(s) * n);
    const double ts = time_of([&] { kernels::syrk_scaled(x, 1.0 / s, Exec::serial); }, 5);
    const double tp = time_of([&] { kernels::syrk_scaled(x, 1.0 / s, Exec::parallel); }, 5);
    report("sample covariance 2048x256", ts, tp);
  }

  {
    const int n = 1 << 16;
    const auto spec = spectra::Spectrum::flat(n);
    const auto tables = kernels::make_mode_tables(spec.sigmas(), 0.5);
    Rng rng(3);
    std::vector<double> x(n), xi(n), xo(n), xio(n), d(n);
    rng.fill_normal(x.data(), x.size());
    rng.fill_normal(xi.data(), xi.size());
    const double ts = time_of(
        [&] { kernels::mode_sweep(tables, 37, x.data(), xi.data(), xo.data(), xio.data(), d.data(), Exec::serial); },
        20);
    const double tp = time_of(
        [&] { kernels::mode_sweep(tables, 37, x.data(), xi.data(), xo.data(), xio.data(), d.data(), Exec::parallel); },
        20);
    report("mode sweep 65536 modes", ts, tp);
  }

  {
    const int n = 96, s = 384, draws = 48;
    std::vector<double> out(draws);
    auto run = [&](Exec exec) {
      kernels::parallel_trials(
          draws,
          [&](int t) {
            Rng rng(child_seed(7, t));
            const auto w = randmat::wishart_sample(n, s, rng, Exec::serial);
            out[t] = spectra::kappa_spd(w);
          },
          exec);
    };
    const double ts = time_of([&] { run(Exec::serial); }, 2);
    const double tp = time_of([&] { run(Exec::parallel); }, 2);
    report("wishart kappa, 48 trials", ts, tp);
  }

  return 0;
}
