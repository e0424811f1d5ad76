#pragma once

#include <complex>
#include <cstddef>
#include <json.hpp>
#include <span>
#include <vector>

#include "curvealign/curves.hpp"

namespace curvealign {

using cplx = std::complex<double>;

/// Integer frequencies -k_max..k_max.
class FrequencyGrid {
 public:
  explicit FrequencyGrid(int k_max);

  int k_max() const { return k_max_; }
  std::size_t size() const { return static_cast<std::size_t>(2 * k_max_ + 1); }
  int k_at(std::size_t index) const { return static_cast<int>(index) - k_max_; }
  std::size_t index_of(int k) const;
  std::vector<double> k_values() const;

  /// Largest admissible k_max for curves of length n: ceil((n-1)/2) - 1.
  static int max_k_for(std::size_t n);
  /// Throws Error(Grid) if k_max exceeds max_k_for(n).
  void validate_for(std::size_t n) const;

  bool operator==(const FrequencyGrid&) const = default;

 private:
  int k_max_;
};

/// Symmetric nonnegative tapering weights over a grid.
class FrequencyWeights {
 public:
  FrequencyWeights(FrequencyGrid grid, std::vector<double> nu);
  /// nu_k = 1 for |k| <= k_max.
  static FrequencyWeights flat(int k_max);

  const FrequencyGrid& grid() const { return grid_; }
  std::span<const double> nu() const { return nu_; }
  double at(int k) const { return nu_[grid_.index_of(k)]; }
  /// sum_k k^2 nu_k.
  double second_moment() const { return second_moment_; }

 private:
  FrequencyGrid grid_;
  std::vector<double> nu_;
  double second_moment_ = 0.0;
};

/// Fourier coefficients f_{k,l} of every curve on a grid plus the mean ESD A_M(k).
class SpectralSet {
 public:
  SpectralSet(FrequencyGrid grid, std::size_t n, std::vector<std::vector<cplx>> coeffs);

  const FrequencyGrid& grid() const { return grid_; }
  std::size_t n() const { return n_; }
  std::size_t curve_count() const { return coeffs_.size(); }
  std::size_t M() const { return coeffs_.size() - 1; }

  std::span<const cplx> row(std::size_t l) const { return coeffs_[l]; }
  cplx coeff(std::size_t l, int k) const { return coeffs_[l][grid_.index_of(k)]; }
  std::span<const double> mean_esd() const { return mean_esd_; }
  double mean_esd(int k) const { return mean_esd_[grid_.index_of(k)]; }

 private:
  FrequencyGrid grid_;
  std::size_t n_;
  std::vector<std::vector<cplx>> coeffs_;
  std::vector<double> mean_esd_;
};

/// Debug dump: {"n", "k_max", "coeffs": [[[re, im], ...] per curve], "mean_esd"}.
nlohmann::json spectral_to_json(const SpectralSet& spec);

/// Correction shifts for one block; entry 0 belongs to the reference and is always 0.
class ShiftVector {
 public:
  ShiftVector() = default;
  /// Throws Error(Input) if alpha is empty, alpha[0] != 0 or an entry is not finite.
  /// Entries are reduced mod 2pi into [0, 2pi).
  explicit ShiftVector(std::vector<double> alpha, std::size_t block_id = 0);
  /// Prepends the reference's 0 to K free coordinates.
  static ShiftVector from_free(std::span<const double> free, std::size_t block_id = 0);

  std::span<const double> alpha() const { return alpha_; }
  std::span<const double> free() const { return std::span<const double>(alpha_).subspan(1); }
  std::size_t size() const { return alpha_.size(); }
  std::size_t block_id() const { return block_id_; }
  double operator[](std::size_t i) const { return alpha_[i]; }

 private:
  std::vector<double> alpha_{0.0};
  std::size_t block_id_ = 0;
};

/// Reduces x into [0, 2pi).
double wrap_angle(double x);

enum class DftMethod { Fast, Direct };

/// f_{k,l} = (1/n) sum_{m=1}^{n} y_l(t_m) exp(-2 pi i m k / n), with y_l(t_m) the
/// m-th sample. Direct evaluates the sum; Fast goes through an FFT.
SpectralSet dft_coeffs(const CurveSet& set, const FrequencyGrid& grid, DftMethod method = DftMethod::Fast);

/// |f_k|^2.
inline double esd(cplx f) { return std::norm(f); }

/// B_m(k, alpha) = |(lambda f_{k,0} + sum_{l>0} e^{i k alpha_l} f_{k,l}) / (K + lambda)|^2.
/// `block` lists curve indices with the reference first; shifts[j] pairs with block[j].
double block_avg_esd(const SpectralSet& spec, std::span<const std::size_t> block, const ShiftVector& shifts,
                     double lambda, int k);

/// sum_k nu_k (A_M(k) - B_m(k, alpha))^2.
double cost(const SpectralSet& spec, std::span<const std::size_t> block, const ShiftVector& shifts,
            double lambda, const FrequencyWeights& weights);

/// d cost / d alpha_l for the K non-reference entries.
std::vector<double> cost_gradient(const SpectralSet& spec, std::span<const std::size_t> block,
                                  const ShiftVector& shifts, double lambda, const FrequencyWeights& weights);

/// sum_k nu_k A_M(k)^2; divides the cost into a scale-free number.
double cost_scale(const SpectralSet& spec, const FrequencyWeights& weights);

/// Noise-free cost D(alpha) = sum_k nu_k |c_s(k)|^4 (|sum_m lambda_m e^{ik(alpha_m - theta_m)}/(K+lambda)|^2 - 1)^2
/// with lambda_0 = lambda and lambda_m = 1 otherwise. `cs_sq` is indexed like the grid.
double deterministic_oracle(std::span<const double> cs_sq, const ShiftVector& theta, const ShiftVector& alpha,
                            double lambda, const FrequencyWeights& weights);

/// Block cost evaluator over the K free coordinates. Holds scratch buffers, so
/// one instance per thread.
class BlockObjective {
 public:
  BlockObjective(const SpectralSet& spec, std::span<const std::size_t> block, double lambda,
                 const FrequencyWeights& weights);

  std::size_t dimension() const { return K_; }
  double lambda() const { return lambda_; }

  double value(std::span<const double> free_alpha);
  double value_and_gradient(std::span<const double> free_alpha, std::span<double> grad);

 private:
  double evaluate(std::span<const double> free_alpha, bool keep_terms);

  std::size_t K_;
  double lambda_;
  double inv_total_;
  std::vector<int> ks_;                // active frequencies (nu_k > 0)
  std::vector<double> nu_;             // per active k
  std::vector<double> a_;              // A_M(k) per active k
  std::vector<cplx> ref_;              // f_{k,0} per active k
  std::vector<cplx> coeffs_;           // K x active, row-major
  std::vector<cplx> terms_;            // e^{ik alpha_j} f_{k,j}, K x active
  std::vector<cplx> z_;                // weighted block average per active k
  std::vector<double> resid_;          // A - B per active k
  std::vector<cplx> powers_;           // scratch for e^{ik alpha}
  int k_abs_max_ = 0;
};

}  // namespace curvealign
