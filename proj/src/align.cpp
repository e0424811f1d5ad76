#include "curvealign/align.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "curvealign/error.hpp"
#include "curvealign/fft.hpp"
#include "curvealign/parallel.hpp"
#include "curvealign/rng.hpp"

namespace curvealign {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double sup_norm(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

struct DescentOutcome {
  std::vector<double> x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Gradient descent with Armijo backtracking. The trial step comes from the
// Barzilai-Borwein quotient of the last two iterates and is capped so that no
// coordinate moves more than `max_move` radians per step.
DescentOutcome descend(BlockObjective& obj, double scale, std::vector<double> x, const AlignConfig& cfg,
                       double bin, std::size_t block_id) {
  const std::size_t dim = x.size();
  const double inv_scale = 1.0 / scale;
  constexpr double c1 = 1e-4;
  constexpr int max_backtracks = 60;
  const double max_move = 0.25;

  std::vector<double> g(dim), g_new(dim), x_new(dim);
  auto eval_grad = [&](std::span<const double> at, std::span<double> grad) {
    const double v = obj.value_and_gradient(at, grad) * inv_scale;
    for (double& gi : grad) gi *= inv_scale;
    if (!std::isfinite(v))
      throw Error(ErrorKind::Numerical, fmt::format("non-finite objective in block {}", block_id));
    return v;
  };

  DescentOutcome out;
  double f = eval_grad(x, g);
  double gmax = sup_norm(g);
  double step = gmax > 0.0 ? bin / gmax : 1.0;
  int it = 0;
  while (true) {
    if (gmax < cfg.grad_tol) {
      out.converged = true;
      break;
    }
    if (it >= cfg.max_iters) break;
    double gg = 0.0;
    for (double gi : g) gg += gi * gi;
    double t = std::min(step, max_move / gmax);
    bool accepted = false;
    double f_new = f;
    for (int bt = 0; bt < max_backtracks; ++bt) {
      for (std::size_t i = 0; i < dim; ++i) x_new[i] = wrap_angle(x[i] - t * g[i]);
      f_new = obj.value(x_new) * inv_scale;
      if (!std::isfinite(f_new))
        throw Error(ErrorKind::Numerical, fmt::format("non-finite objective in block {}", block_id));
      if (f_new <= f - c1 * t * gg) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    ++it;
    if (!accepted) {
      // No decrease representable at this scale: a numerical stationary point.
      out.converged = true;
      break;
    }
    f_new = eval_grad(x_new, g_new);
    // BB2 step: s.y / y.y with s = -t g.
    double sy = 0.0, yy = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
      const double s = -t * g[i];
      const double y = g_new[i] - g[i];
      sy += s * y;
      yy += y * y;
    }
    step = (sy > 0.0 && yy > 0.0) ? sy / yy : 2.0 * t;
    x.swap(x_new);
    g.swap(g_new);
    f = f_new;
    gmax = sup_norm(g);
  }
  out.x = std::move(x);
  out.value = f;
  out.iterations = it;
  return out;
}

}  // namespace

double lambda_schedule(std::size_t K, double beta) {
  const double v = std::floor(std::pow(static_cast<double>(K), beta) + 1e-9);
  return std::max(1.0, v);
}

void AlignConfig::validate() const {
  if (!(beta > 0.0 && beta < 1.0)) throw Error(ErrorKind::Input, fmt::format("beta must lie in (0, 1), got {}", beta));
  if (lambda && !(*lambda > 0.0)) throw Error(ErrorKind::Input, "lambda override must be positive");
  if (max_iters < 0) throw Error(ErrorKind::Input, "max_iters must be >= 0");
  if (!(grad_tol > 0.0)) throw Error(ErrorKind::Input, "grad_tol must be positive");
  if (n_starts < 1) throw Error(ErrorKind::Input, "n_starts must be >= 1");
  if (perturb_bins < 0) throw Error(ErrorKind::Input, "perturb_bins must be >= 0");
}

double AlignConfig::lambda_for(std::size_t K) const { return lambda ? *lambda : lambda_schedule(K, beta); }

ShiftVector init_shifts_xcorr(const CurveSet& set, std::span<const std::size_t> block, std::size_t block_id) {
  const std::size_t n = set.n();
  const auto ref = set.samples(CurveSet::reference_index);
  double ref_norm = 0.0;
  for (double v : ref) ref_norm += v * v;
  ref_norm = std::sqrt(ref_norm);

  std::vector<double> alpha(block.size(), 0.0);
  for (std::size_t j = 1; j < block.size(); ++j) {
    const auto y = set.samples(block[j]);
    double y_norm = 0.0;
    for (double v : y) y_norm += v * v;
    y_norm = std::sqrt(y_norm);
    const auto r = fft::circular_xcorr(ref, y);
    const double best = *std::max_element(r.begin(), r.end());
    // Values within rounding of the maximum count as ties.
    const double tie_tol = 1e-11 * ref_norm * y_norm;
    std::size_t d = 0;
    while (d < n && r[d] < best - tie_tol) ++d;
    alpha[j] = static_cast<double>(d) * bin_width(n);
  }
  return ShiftVector(std::move(alpha), block_id);
}

BlockResult minimize_block(const AlignProblem& problem, std::span<const std::size_t> block, std::size_t block_id,
                           const AlignConfig& config) {
  config.validate();
  if (block.size() < 2) throw Error(ErrorKind::Input, fmt::format("block {} has no curves to align", block_id));
  const std::size_t K = block.size() - 1;
  const double lambda = config.lambda_for(K);
  BlockObjective obj(problem.spectra, block, lambda, problem.weights);
  double scale = cost_scale(problem.spectra, problem.weights);
  if (!(scale > 0.0)) scale = 1.0;
  const double bin = bin_width(problem.curves.n());

  const ShiftVector init = init_shifts_xcorr(problem.curves, block, block_id);
  const std::vector<double> x0(init.free().begin(), init.free().end());

  BlockResult result;
  result.initial_objective = obj.value(x0) / scale;
  if (!std::isfinite(result.initial_objective))
    throw Error(ErrorKind::Numerical, fmt::format("non-finite objective in block {}", block_id));

  DescentOutcome best;
  best.value = std::numeric_limits<double>::infinity();
  int total_iters = 0;
  for (int s = 0; s < config.n_starts; ++s) {
    std::vector<double> start = x0;
    if (s > 0) {
      Rng rng(derive_seed(config.rng_seed, {kStreamStarts, block_id, static_cast<std::uint64_t>(s)}));
      std::uniform_int_distribution<int> jitter(-config.perturb_bins, config.perturb_bins);
      for (double& a : start) a = wrap_angle(a + jitter(rng) * bin);
    }
    DescentOutcome out = descend(obj, scale, std::move(start), config, bin, block_id);
    total_iters += out.iterations;
    if (out.value < best.value) best = std::move(out);
  }

  result.shifts = ShiftVector::from_free(best.x, block_id);
  result.objective = best.value;
  result.raw_objective = best.value * scale;
  result.iterations = total_iters;
  result.converged = best.converged;
  return result;
}

AlignmentResult align_all(const AlignProblem& problem, const BlockPlan& plan, const AlignConfig& config,
                          unsigned threads) {
  config.validate();
  const std::size_t total = problem.curves.size();
  for (const auto& b : plan.blocks)
    for (std::size_t idx : b)
      if (idx >= total) throw Error(ErrorKind::Input, fmt::format("block index {} out of range", idx));

  std::vector<BlockResult> blocks(plan.N());
  parallel_for(plan.N(), threads, [&](std::size_t m) {
    try {
      blocks[m] = minimize_block(problem, plan.blocks[m], m, config);
    } catch (const Error& e) {
      throw Error(e.kind(), fmt::format("block {}: {}", m, e.message()));
    }
  });

  AlignmentResult res;
  res.theta_hat.assign(total, 0.0);
  res.block_of.assign(total, 0);
  res.K = plan.K;
  res.lambda = config.lambda_for(plan.K);
  res.config = config;
  for (std::size_t m = 0; m < plan.N(); ++m) {
    const auto& b = plan.blocks[m];
    for (std::size_t j = 1; j < b.size(); ++j) {
      res.theta_hat[b[j]] = blocks[m].shifts[j];
      res.block_of[b[j]] = m;
    }
    res.block_objective.push_back(blocks[m].objective);
    res.block_initial_objective.push_back(blocks[m].initial_objective);
    res.block_iterations.push_back(blocks[m].iterations);
    res.block_converged.push_back(blocks[m].converged);
  }
  return res;
}

AlignmentResult align_curves(const CurveSet& set, std::size_t K, const FrequencyWeights& weights,
                             const AlignConfig& config, unsigned threads) {
  const BlockPlan plan = make_blocks(set, K);
  const SpectralSet spectra = dft_coeffs(set, weights.grid());
  const AlignProblem problem{set, spectra, weights};
  return align_all(problem, plan, config, threads);
}

double block_size_criterion(const SpectralSet& spec, const FrequencyWeights& weights, std::size_t L) {
  if (L > spec.M())
    throw Error(ErrorKind::Input, fmt::format("candidate L = {} exceeds M = {}", L, spec.M()));
  if (!(spec.grid() == weights.grid())) throw Error(ErrorKind::Grid, "weights and spectra use different grids");
  const auto a = spec.mean_esd();
  const auto nu = weights.nu();
  double total = 0.0;
  for (std::size_t q = 0; q < nu.size(); ++q) {
    if (nu[q] == 0.0) continue;
    double partial = 0.0;
    for (std::size_t l = 0; l <= L; ++l) partial += std::norm(spec.row(l)[q]);
    partial /= static_cast<double>(L + 1);
    const double d = a[q] - partial;
    total += nu[q] * d * d;
  }
  return total;
}

BlockSizeChoice select_block_size(const SpectralSet& spec, const FrequencyWeights& weights, double epsilon,
                                  std::vector<std::size_t> candidates) {
  if (candidates.empty()) throw Error(ErrorKind::Input, "empty block-size candidate list");
  if (!(epsilon >= 0.0)) throw Error(ErrorKind::Input, "epsilon must be >= 0");
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  BlockSizeChoice choice;
  for (std::size_t L : candidates) {
    if (L == 0) throw Error(ErrorKind::Input, "block-size candidates must be >= 1");
    const double c = block_size_criterion(spec, weights, L);
    if (c <= epsilon) {
      choice.K = L;
      choice.criterion = c;
      return choice;
    }
    choice.K = L;
    choice.criterion = c;
  }
  choice.threshold_unmet = true;
  return choice;
}

double circular_distance(double a, double b) {
  const double d = std::abs(wrap_angle(a) - wrap_angle(b));
  return std::min(d, kTwoPi - d);
}

ErrorSummary circular_error(std::span<const double> theta_hat, std::span<const double> theta_true,
                            double tolerance) {
  if (theta_hat.size() != theta_true.size())
    throw Error(ErrorKind::Input, fmt::format("{} estimates for {} true shifts", theta_hat.size(), theta_true.size()));
  ErrorSummary s;
  s.tolerance = tolerance;
  s.distance.reserve(theta_hat.size());
  double sq = 0.0;
  std::size_t beyond = 0;
  for (std::size_t i = 0; i < theta_hat.size(); ++i) {
    const double d = circular_distance(theta_hat[i], theta_true[i]);
    s.distance.push_back(d);
    sq += d * d;
    s.max = std::max(s.max, d);
    if (d > tolerance) ++beyond;
  }
  if (!theta_hat.empty()) {
    s.rms = std::sqrt(sq / static_cast<double>(theta_hat.size()));
    s.fraction_beyond = static_cast<double>(beyond) / static_cast<double>(theta_hat.size());
  }
  return s;
}

std::vector<BlockOffset> block_offsets(std::span<const double> theta_hat, std::span<const double> theta_true,
                                       const BlockPlan& plan) {
  if (theta_hat.size() != theta_true.size()) throw Error(ErrorKind::Input, "length mismatch");
  std::vector<BlockOffset> out;
  for (const auto& b : plan.blocks) {
    double sc = 0.0, ss = 0.0;
    for (std::size_t j = 1; j < b.size(); ++j) {
      const double e = theta_hat[b[j]] - theta_true[b[j]];
      sc += std::cos(e);
      ss += std::sin(e);
    }
    BlockOffset o;
    o.offset = std::atan2(ss, sc);
    double sq = 0.0;
    for (std::size_t j = 1; j < b.size(); ++j) {
      const double d = circular_distance(theta_hat[b[j]] - theta_true[b[j]], o.offset);
      sq += d * d;
    }
    o.dispersion = b.size() > 1 ? std::sqrt(sq / static_cast<double>(b.size() - 1)) : 0.0;
    out.push_back(o);
  }
  return out;
}

std::vector<double> aligned_mean(const CurveSet& set, std::span<const double> theta_hat) {
  if (theta_hat.size() != set.size()) throw Error(ErrorKind::Input, "one shift per curve required");
  const std::size_t n = set.n();
  std::vector<cplx> acc(n / 2 + 1, 0.0);
  for (std::size_t l = 0; l < set.size(); ++l) {
    auto spec = fft::rfft(set.samples(l));
    fft::shift_half_spectrum(spec, n, -theta_hat[l]);
    for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += spec[k];
  }
  const double inv = 1.0 / static_cast<double>(set.size());
  for (auto& c : acc) c *= inv;
  return fft::irfft(acc, n);
}

}  // namespace curvealign
