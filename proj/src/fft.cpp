#include "tactwin/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cstring>
#include <memory>
#include <mutex>

#include "tactwin/error.hpp"

namespace tactwin::fft {
namespace {

// The FFTW planner is not reentrant; execution is.
std::mutex& plannerMutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};
struct PlanFree {
  void operator()(fftw_plan_s* p) const {
    std::lock_guard lock(plannerMutex());
    fftw_destroy_plan(p);
  }
};

template <class T>
std::unique_ptr<T, FftwFree> alloc(std::size_t n) {
  auto* p = static_cast<T*>(fftw_malloc(sizeof(T) * std::max<std::size_t>(n, 1)));
  if (p == nullptr) throw std::bad_alloc();
  return std::unique_ptr<T, FftwFree>(p);
}

}  // namespace

std::vector<std::complex<double>> forward(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n == 0) throw Error(Errc::EmptyInput, "fft of empty signal");
  auto in = alloc<double>(n);
  auto out = alloc<fftw_complex>(n / 2 + 1);
  std::unique_ptr<fftw_plan_s, PlanFree> plan;
  {
    std::lock_guard lock(plannerMutex());
    plan.reset(fftw_plan_dft_r2c_1d(static_cast<int>(n), in.get(), out.get(), FFTW_ESTIMATE));
  }
  std::memcpy(in.get(), x.data(), n * sizeof(double));
  fftw_execute(plan.get());
  std::vector<std::complex<double>> bins(n / 2 + 1);
  for (std::size_t k = 0; k < bins.size(); ++k) bins[k] = {out.get()[k][0], out.get()[k][1]};
  return bins;
}

std::vector<double> inverse(std::span<const std::complex<double>> bins, std::size_t n) {
  if (bins.size() != n / 2 + 1) throw Error(Errc::LengthMismatch, "bin count must be n/2+1");
  auto in = alloc<fftw_complex>(bins.size());
  auto out = alloc<double>(n);
  std::unique_ptr<fftw_plan_s, PlanFree> plan;
  {
    std::lock_guard lock(plannerMutex());
    plan.reset(fftw_plan_dft_c2r_1d(static_cast<int>(n), in.get(), out.get(), FFTW_ESTIMATE));
  }
  for (std::size_t k = 0; k < bins.size(); ++k) {
    in.get()[k][0] = bins[k].real();
    in.get()[k][1] = bins[k].imag();
  }
  fftw_execute(plan.get());
  std::vector<double> x(out.get(), out.get() + n);
  for (double& v : x) v /= static_cast<double>(n);
  return x;
}

std::size_t peakBin(std::span<const std::complex<double>> bins, std::size_t lo, std::size_t hi) {
  if (bins.empty()) throw Error(Errc::EmptyInput, "no bins");
  hi = std::min(hi, bins.size() - 1);
  lo = std::min(lo, hi);
  std::size_t best = lo;
  for (std::size_t k = lo; k <= hi; ++k) {
    if (std::abs(bins[k]) > std::abs(bins[best])) best = k;
  }
  return best;
}

}  // namespace tactwin::fft
