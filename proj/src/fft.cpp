#include "curvealign/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <utility>

namespace curvealign::fft {

namespace {

enum class PlanKind { Forward, Inverse };

// The FFTW planner is not thread-safe; execution with the new-array interface
// is. Plans are created once per (n, kind) under a lock and never destroyed.
// FFTW_UNALIGNED keeps results independent of buffer alignment.
fftw_plan get_plan(std::size_t n, PlanKind kind) {
  static std::mutex mu;
  static std::map<std::pair<std::size_t, PlanKind>, fftw_plan> cache;
  std::lock_guard lock(mu);
  auto key = std::make_pair(n, kind);
  if (auto it = cache.find(key); it != cache.end()) return it->second;
  std::vector<double> real(n);
  std::vector<cplx> spec(n / 2 + 1);
  const int ni = static_cast<int>(n);
  fftw_plan plan = nullptr;
  if (kind == PlanKind::Forward) {
    plan = fftw_plan_dft_r2c_1d(ni, real.data(), reinterpret_cast<fftw_complex*>(spec.data()),
                                FFTW_ESTIMATE | FFTW_UNALIGNED);
  } else {
    plan = fftw_plan_dft_c2r_1d(ni, reinterpret_cast<fftw_complex*>(spec.data()), real.data(),
                                FFTW_ESTIMATE | FFTW_UNALIGNED);
  }
  if (plan == nullptr) throw std::runtime_error("fftw planning failed");
  cache.emplace(key, plan);
  return plan;
}

}  // namespace

std::vector<cplx> rfft(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<double> in(x.begin(), x.end());
  std::vector<cplx> out(n / 2 + 1);
  fftw_execute_dft_r2c(get_plan(n, PlanKind::Forward), in.data(),
                       reinterpret_cast<fftw_complex*>(out.data()));
  return out;
}

std::vector<double> irfft(std::span<const cplx> half_spectrum, std::size_t n) {
  if (half_spectrum.size() != n / 2 + 1) throw std::invalid_argument("irfft: spectrum size mismatch");
  std::vector<cplx> in(half_spectrum.begin(), half_spectrum.end());
  std::vector<double> out(n);
  fftw_execute_dft_c2r(get_plan(n, PlanKind::Inverse), reinterpret_cast<fftw_complex*>(in.data()),
                       out.data());
  const double scale = 1.0 / static_cast<double>(n);
  for (double& v : out) v *= scale;
  return out;
}

void shift_half_spectrum(std::span<cplx> half_spectrum, std::size_t n, double theta) {
  for (std::size_t k = 1; k < half_spectrum.size(); ++k) {
    const double phase = -static_cast<double>(k) * theta;
    if (n % 2 == 0 && k == n / 2) {
      half_spectrum[k] *= std::cos(phase);
    } else {
      half_spectrum[k] *= std::polar(1.0, phase);
    }
  }
}

std::vector<double> shift_signal(std::span<const double> x, double theta) {
  auto spec = rfft(x);
  shift_half_spectrum(spec, x.size(), theta);
  return irfft(spec, x.size());
}

std::vector<double> circular_xcorr(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("circular_xcorr: length mismatch");
  auto fa = rfft(a);
  auto fb = rfft(b);
  for (std::size_t k = 0; k < fa.size(); ++k) fa[k] = std::conj(fa[k]) * fb[k];
  return irfft(fa, a.size());
}

}  // namespace curvealign::fft
