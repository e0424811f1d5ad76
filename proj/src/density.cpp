#include "curvealign/density.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "curvealign/error.hpp"

namespace curvealign {

namespace {

double quantile_sorted(std::span<const double> sorted, double p) {
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace

std::vector<double> uniform_grid(double lo, double hi, std::size_t count) {
  if (count < 2) throw Error(ErrorKind::Input, "grid needs at least two points");
  std::vector<double> g(count);
  const double step = (hi - lo) / static_cast<double>(count - 1);
  for (std::size_t i = 0; i < count; ++i) g[i] = lo + step * static_cast<double>(i);
  g.back() = hi;
  return g;
}

std::vector<double> default_density_grid() { return uniform_grid(0.0, 2.0 * std::numbers::pi, 1024); }

double silverman_bandwidth(std::span<const double> samples) {
  if (samples.size() < 2) throw Error(ErrorKind::DegenerateSample, "need at least two samples");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  if (sorted.front() == sorted.back())
    throw Error(ErrorKind::DegenerateSample, "all samples are equal");
  const double N = static_cast<double>(sorted.size());
  double mean = 0.0;
  for (double v : sorted) mean += v;
  mean /= N;
  double ss = 0.0;
  for (double v : sorted) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (N - 1.0));
  const double iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
  double spread = std::min(sd, iqr / 1.34);
  if (!(spread > 0.0)) spread = sd;
  return 0.9 * spread * std::pow(N, -0.2);
}

double kernel_value(Kernel kernel, double u) {
  switch (kernel) {
    case Kernel::Gaussian:
      return std::exp(-0.5 * u * u) / std::sqrt(2.0 * std::numbers::pi);
  }
  return 0.0;
}

DensityEstimate kde(std::span<const double> samples, double bandwidth, std::span<const double> grid, Kernel kernel) {
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth))
    throw Error(ErrorKind::Input, fmt::format("bandwidth must be positive, got {}", bandwidth));
  if (samples.empty()) throw Error(ErrorKind::DegenerateSample, "no samples");
  DensityEstimate est;
  est.grid.assign(grid.begin(), grid.end());
  est.values.assign(grid.size(), 0.0);
  est.bandwidth = bandwidth;
  est.kernel = kernel;
  est.sample_count = samples.size();
  const double norm = 1.0 / (static_cast<double>(samples.size()) * bandwidth);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double acc = 0.0;
    for (double s : samples) acc += kernel_value(kernel, (grid[i] - s) / bandwidth);
    est.values[i] = acc * norm;
  }
  return est;
}

double trapezoid(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorKind::Input, "trapezoid: length mismatch");
  double s = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) s += 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
  return s;
}

double ise(const DensityEstimate& est, const std::function<double(double)>& true_pdf) {
  std::vector<double> sq(est.grid.size());
  for (std::size_t i = 0; i < sq.size(); ++i) {
    const double d = est.values[i] - true_pdf(est.grid[i]);
    sq[i] = d * d;
  }
  return trapezoid(est.grid, sq);
}

double mise(std::span<const double> ise_values) {
  if (ise_values.empty()) throw Error(ErrorKind::Input, "no replicates");
  double s = 0.0;
  for (double v : ise_values) s += v;
  return s / static_cast<double>(ise_values.size());
}

double ks_statistic(std::span<const double> samples, const std::function<double(double)>& cdf) {
  if (samples.empty()) throw Error(ErrorKind::Input, "no samples");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double N = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double F = cdf(sorted[i]);
    d = std::max({d, static_cast<double>(i + 1) / N - F, F - static_cast<double>(i) / N});
  }
  return d;
}

}  // namespace curvealign
