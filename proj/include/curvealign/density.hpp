#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace curvealign {

enum class Kernel { Gaussian };

struct DensityEstimate {
  std::vector<double> grid;
  std::vector<double> values;
  double bandwidth = 0.0;
  Kernel kernel = Kernel::Gaussian;
  std::size_t sample_count = 0;
};

/// `count` equally spaced points covering [lo, hi], both ends included.
std::vector<double> uniform_grid(double lo, double hi, std::size_t count);
/// The default evaluation grid: 1024 points on [0, 2pi].
std::vector<double> default_density_grid();

/// 0.9 * min(sd, IQR / 1.34) * N^(-1/5); sd uses N-1, quartiles interpolate linearly.
/// Falls back to sd when the IQR is zero. Throws Error(DegenerateSample) when all samples are equal.
double silverman_bandwidth(std::span<const double> samples);

double kernel_value(Kernel kernel, double u);

/// f(x) = 1/(N h) sum_m psi((x - x_m) / h), no boundary correction.
DensityEstimate kde(std::span<const double> samples, double bandwidth, std::span<const double> grid,
                    Kernel kernel = Kernel::Gaussian);

/// Trapezoid integral over an increasing grid.
double trapezoid(std::span<const double> x, std::span<const double> y);

/// Integrated squared error against a reference density on the estimate's grid.
double ise(const DensityEstimate& est, const std::function<double(double)>& true_pdf);

/// Mean of per-replicate ISE values.
double mise(std::span<const double> ise_values);

/// sup_x |F_N(x) - F(x)|.
double ks_statistic(std::span<const double> samples, const std::function<double(double)>& cdf);

/// Uniform law on [a, b].
struct UniformLaw {
  double a = 0.0;
  double b = 1.0;
  double pdf(double x) const { return (x >= a && x <= b) ? 1.0 / (b - a) : 0.0; }
  double cdf(double x) const { return x <= a ? 0.0 : (x >= b ? 1.0 : (x - a) / (b - a)); }
};

}  // namespace curvealign
