#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "curvealign/curves.hpp"
#include "curvealign/spectral.hpp"

namespace curvealign {

struct AlignConfig {
  /// lambda = floor(K^beta), 0 < beta < 1.
  double beta = 0.9;
  /// Overrides the beta schedule when set.
  std::optional<double> lambda;
  int max_iters = 400;
  /// Stop when the sup-norm of the gradient of the normalized cost drops below this.
  double grad_tol = 1e-10;
  int n_starts = 3;
  /// Random starts perturb each coordinate by up to this many grid bins.
  int perturb_bins = 2;
  std::uint64_t rng_seed = 1;

  /// Throws Error(Input) on an out-of-range field.
  void validate() const;
  double lambda_for(std::size_t K) const;
};

/// floor(K^beta), at least 1.
double lambda_schedule(std::size_t K, double beta);

/// Everything a block minimization reads. The referenced objects must outlive it.
struct AlignProblem {
  const CurveSet& curves;
  const SpectralSet& spectra;
  const FrequencyWeights& weights;
};

struct BlockResult {
  ShiftVector shifts;
  /// Normalized cost (cost / sum nu A^2) at the cross-correlation start and at the result.
  double initial_objective = 0.0;
  double objective = 0.0;
  double raw_objective = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct AlignmentResult {
  /// Shift of every curve relative to the reference; theta_hat[0] = 0.
  std::vector<double> theta_hat;
  /// Block of each curve (0-based); the reference is reported in block 0.
  std::vector<std::size_t> block_of;
  std::vector<double> block_objective;
  std::vector<double> block_initial_objective;
  std::vector<int> block_iterations;
  std::vector<bool> block_converged;
  std::size_t K = 0;
  double lambda = 0.0;
  AlignConfig config;
};

/// Grid shift maximizing the circular cross-correlation of each block curve
/// with the reference; ties resolve to the smallest shift.
ShiftVector init_shifts_xcorr(const CurveSet& set, std::span<const std::size_t> block, std::size_t block_id = 0);

/// Multistart gradient descent with Armijo backtracking on the normalized block cost.
BlockResult minimize_block(const AlignProblem& problem, std::span<const std::size_t> block, std::size_t block_id,
                           const AlignConfig& config);

/// Aligns every block independently; output does not depend on `threads`.
AlignmentResult align_all(const AlignProblem& problem, const BlockPlan& plan, const AlignConfig& config,
                          unsigned threads = 1);

/// Convenience: spectra + weights + blocks from a curve set.
AlignmentResult align_curves(const CurveSet& set, std::size_t K, const FrequencyWeights& weights,
                             const AlignConfig& config, unsigned threads = 1);

struct BlockSizeChoice {
  std::size_t K = 0;
  double criterion = 0.0;
  /// Set when no candidate met epsilon; K is then the largest candidate.
  bool threshold_unmet = false;
};

/// sum_k nu_k (A_M(k) - (1/(L+1)) sum_{l<=L} |f_{k,l}|^2)^2.
double block_size_criterion(const SpectralSet& spec, const FrequencyWeights& weights, std::size_t L);

/// Smallest candidate L whose criterion is <= epsilon.
BlockSizeChoice select_block_size(const SpectralSet& spec, const FrequencyWeights& weights, double epsilon,
                                  std::vector<std::size_t> candidates);

/// min(|a - b|, 2pi - |a - b|) after reduction mod 2pi.
double circular_distance(double a, double b);

struct ErrorSummary {
  std::vector<double> distance;
  double rms = 0.0;
  double max = 0.0;
  double fraction_beyond = 0.0;
  double tolerance = 0.0;
};

ErrorSummary circular_error(std::span<const double> theta_hat, std::span<const double> theta_true,
                            double tolerance);

struct BlockOffset {
  /// Circular mean of theta_hat - theta over the block's non-reference curves, in (-pi, pi].
  double offset = 0.0;
  /// RMS circular distance of the block's errors to `offset`.
  double dispersion = 0.0;
};

std::vector<BlockOffset> block_offsets(std::span<const double> theta_hat, std::span<const double> theta_true,
                                       const BlockPlan& plan);

/// s_hat(t) = (M+1)^-1 sum_l y_l(t + theta_hat_l), shifts applied as phase rotations.
std::vector<double> aligned_mean(const CurveSet& set, std::span<const double> theta_hat);

}  // namespace curvealign
