#include "curvealign/baseline.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

#include "curvealign/error.hpp"
#include "curvealign/fft.hpp"

namespace curvealign {

namespace {

using fft::cplx;

// sum_i x_i^2 from a half spectrum (Parseval).
double energy(std::span<const cplx> half, std::size_t n) {
  double s = std::norm(half[0]);
  const std::size_t last = half.size() - 1;
  for (std::size_t k = 1; k < half.size(); ++k) {
    const bool nyquist = (n % 2 == 0) && k == last;
    s += (nyquist ? 1.0 : 2.0) * std::norm(half[k]);
  }
  return s / static_cast<double>(n);
}

// Spectrum of y(t + alpha).
std::vector<cplx> advanced(std::span<const cplx> half, std::size_t n, double alpha) {
  std::vector<cplx> out(half.begin(), half.end());
  fft::shift_half_spectrum(out, n, -alpha);
  return out;
}

double ssd(std::span<const cplx> a, std::span<const cplx> b, std::size_t n) {
  std::vector<cplx> d(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) d[k] = a[k] - b[k];
  return energy(d, n);
}

std::vector<cplx> mean_spectrum(const std::vector<std::vector<cplx>>& spectra, std::span<const double> alpha,
                                std::size_t n) {
  std::vector<cplx> mean(spectra.front().size(), 0.0);
  for (std::size_t l = 0; l < spectra.size(); ++l) {
    const auto s = advanced(spectra[l], n, alpha[l]);
    for (std::size_t k = 0; k < mean.size(); ++k) mean[k] += s[k];
  }
  const double inv = 1.0 / static_cast<double>(spectra.size());
  for (auto& c : mean) c *= inv;
  return mean;
}

double total_ssd(const std::vector<std::vector<cplx>>& spectra, std::span<const double> alpha, std::size_t n) {
  const auto mean = mean_spectrum(spectra, alpha, n);
  double t = 0.0;
  for (std::size_t l = 0; l < spectra.size(); ++l) t += ssd(advanced(spectra[l], n, alpha[l]), mean, n);
  return t;
}

AlignmentResult single_block_result(std::vector<double> theta, double objective, int iterations, bool converged) {
  AlignmentResult r;
  r.block_of.assign(theta.size(), 0);
  r.theta_hat = std::move(theta);
  r.block_objective = {objective};
  r.block_initial_objective = {objective};
  r.block_iterations = {iterations};
  r.block_converged = {converged};
  r.K = r.theta_hat.empty() ? 0 : r.theta_hat.size() - 1;
  return r;
}

}  // namespace

LseResult lse_align(const CurveSet& set, int max_rounds, double tol) {
  if (set.empty()) throw Error(ErrorKind::Input, "empty curve set");
  if (max_rounds < 1) throw Error(ErrorKind::Input, "max_rounds must be >= 1");
  const std::size_t n = set.n();
  const double bin = bin_width(n);
  std::vector<std::vector<cplx>> spectra;
  spectra.reserve(set.size());
  for (std::size_t l = 0; l < set.size(); ++l) spectra.push_back(fft::rfft(set.samples(l)));

  std::vector<double> alpha(set.size(), 0.0);
  LseResult out;
  out.objective_history.push_back(total_ssd(spectra, alpha, n));
  bool converged = false;
  int round = 0;
  while (round < max_rounds) {
    ++round;
    const auto mean = mean_spectrum(spectra, alpha, n);
    const double mean_energy = energy(mean, n);
    std::vector<double> next(alpha.size());
    for (std::size_t l = 0; l < set.size(); ++l) {
      const double own_energy = energy(spectra[l], n);
      // r[d] = sum_i mean[i] y_l[i + d]
      std::vector<cplx> cross(mean.size());
      for (std::size_t k = 0; k < mean.size(); ++k) cross[k] = std::conj(mean[k]) * spectra[l][k];
      const auto r = fft::irfft(cross, n);
      std::size_t d = 0;
      for (std::size_t i = 1; i < n; ++i)
        if (r[i] > r[d]) d = i;
      auto s_at = [&](std::size_t i) { return own_energy + mean_energy - 2.0 * r[i % n]; };
      const double s_minus = s_at(d + n - 1), s_0 = s_at(d), s_plus = s_at(d + 1);
      const double curv = s_minus - 2.0 * s_0 + s_plus;
      double delta = curv > 0.0 ? 0.5 * (s_minus - s_plus) / curv : 0.0;
      delta = std::clamp(delta, -0.5, 0.5);

      // Keep whichever of {current, integer, refined} fits the mean best.
      const double candidates[3] = {alpha[l], static_cast<double>(d) * bin,
                                    (static_cast<double>(d) + delta) * bin};
      double best = alpha[l];
      double best_ssd = ssd(advanced(spectra[l], n, alpha[l]), mean, n);
      for (int c = 1; c < 3; ++c) {
        const double v = ssd(advanced(spectra[l], n, candidates[c]), mean, n);
        if (v < best_ssd) {
          best_ssd = v;
          best = candidates[c];
        }
      }
      next[l] = best;
    }
    const double anchor = next[CurveSet::reference_index];
    double max_update = 0.0;
    for (std::size_t l = 0; l < next.size(); ++l) {
      next[l] = wrap_angle(next[l] - anchor);
      max_update = std::max(max_update, circular_distance(next[l], alpha[l]));
    }
    alpha = std::move(next);
    out.objective_history.push_back(total_ssd(spectra, alpha, n));
    if (max_update < tol) {
      converged = true;
      break;
    }
  }
  out.rounds = round;
  out.alignment = single_block_result(alpha, out.objective_history.back(), round, converged);
  return out;
}

AlignmentResult landmark_align(const CurveSet& set) {
  if (set.empty()) throw Error(ErrorKind::Input, "empty curve set");
  const std::size_t n = set.n();
  std::vector<std::size_t> peak(set.size());
  for (std::size_t l = 0; l < set.size(); ++l) {
    const auto y = set.samples(l);
    const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
    if (*lo == *hi) throw Error(ErrorKind::DegenerateLandmark, fmt::format("curve {} is constant", l));
    peak[l] = static_cast<std::size_t>(std::max_element(y.begin(), y.end()) - y.begin());
  }
  std::vector<double> theta(set.size());
  for (std::size_t l = 0; l < set.size(); ++l) {
    const double diff = static_cast<double>(peak[l]) - static_cast<double>(peak[0]);
    theta[l] = wrap_angle(diff * bin_width(n));
  }
  return single_block_result(std::move(theta), 0.0, 1, true);
}

}  // namespace curvealign
