#include "curvealign/spectral.hpp"

#include <fmt/format.h>

#include <cmath>
#include <numbers>

#include "curvealign/error.hpp"
#include "curvealign/fft.hpp"

namespace curvealign {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void check_block(const SpectralSet& spec, std::span<const std::size_t> block, const ShiftVector& shifts,
                 double lambda) {
  if (block.empty() || block.front() != CurveSet::reference_index)
    throw Error(ErrorKind::Input, "block must start with the reference index 0");
  if (shifts.size() != block.size())
    throw Error(ErrorKind::Input,
                fmt::format("shift vector has {} entries, block has {}", shifts.size(), block.size()));
  if (!(lambda > 0.0) || !std::isfinite(lambda))
    throw Error(ErrorKind::Input, fmt::format("lambda must be positive, got {}", lambda));
  for (std::size_t idx : block) {
    if (idx >= spec.curve_count())
      throw Error(ErrorKind::Input, fmt::format("block index {} out of range", idx));
  }
}

void check_weights(const SpectralSet& spec, const FrequencyWeights& weights) {
  if (!(spec.grid() == weights.grid()))
    throw Error(ErrorKind::Grid, fmt::format("weights grid k_max {} differs from spectral grid k_max {}",
                                             weights.grid().k_max(), spec.grid().k_max()));
}

}  // namespace

FrequencyGrid::FrequencyGrid(int k_max) : k_max_(k_max) {
  if (k_max < 0) throw Error(ErrorKind::Grid, fmt::format("k_max must be >= 0, got {}", k_max));
}

std::size_t FrequencyGrid::index_of(int k) const {
  if (k < -k_max_ || k > k_max_)
    throw Error(ErrorKind::Grid, fmt::format("frequency {} outside grid |k| <= {}", k, k_max_));
  return static_cast<std::size_t>(k + k_max_);
}

std::vector<double> FrequencyGrid::k_values() const {
  std::vector<double> out;
  out.reserve(size());
  for (int k = -k_max_; k <= k_max_; ++k) out.push_back(static_cast<double>(k));
  return out;
}

int FrequencyGrid::max_k_for(std::size_t n) {
  // ceil((n - 1) / 2) - 1, i.e. strictly below the Nyquist index.
  return static_cast<int>(n / 2) - 1;
}

void FrequencyGrid::validate_for(std::size_t n) const {
  if (k_max_ > max_k_for(n))
    throw Error(ErrorKind::Grid,
                fmt::format("k_max {} exceeds the bound {} for curves of length {}", k_max_, max_k_for(n), n));
}

FrequencyWeights::FrequencyWeights(FrequencyGrid grid, std::vector<double> nu)
    : grid_(grid), nu_(std::move(nu)) {
  if (nu_.size() != grid_.size())
    throw Error(ErrorKind::Grid, fmt::format("{} weights for a grid of {} frequencies", nu_.size(), grid_.size()));
  for (int k = -grid_.k_max(); k <= grid_.k_max(); ++k) {
    const double w = nu_[grid_.index_of(k)];
    if (!std::isfinite(w) || w < 0.0)
      throw Error(ErrorKind::Input, fmt::format("weight at k = {} must be finite and >= 0", k));
    if (w != nu_[grid_.index_of(-k)])
      throw Error(ErrorKind::Input, fmt::format("weights not symmetric at k = {}", k));
    second_moment_ += static_cast<double>(k) * static_cast<double>(k) * w;
  }
}

FrequencyWeights FrequencyWeights::flat(int k_max) {
  FrequencyGrid grid(k_max);
  return FrequencyWeights(grid, std::vector<double>(grid.size(), 1.0));
}

SpectralSet::SpectralSet(FrequencyGrid grid, std::size_t n, std::vector<std::vector<cplx>> coeffs)
    : grid_(grid), n_(n), coeffs_(std::move(coeffs)) {
  if (coeffs_.empty()) throw Error(ErrorKind::InsufficientData, "spectral set needs at least one curve");
  mean_esd_.assign(grid_.size(), 0.0);
  for (const auto& row : coeffs_) {
    if (row.size() != grid_.size())
      throw Error(ErrorKind::Grid, "coefficient row length differs from grid size");
    for (std::size_t i = 0; i < row.size(); ++i) mean_esd_[i] += std::norm(row[i]);
  }
  const double inv = 1.0 / static_cast<double>(coeffs_.size());
  for (double& a : mean_esd_) a *= inv;
}

double wrap_angle(double x) {
  double r = std::fmod(x, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  if (r >= kTwoPi) r = 0.0;
  return r;
}

ShiftVector::ShiftVector(std::vector<double> alpha, std::size_t block_id)
    : alpha_(std::move(alpha)), block_id_(block_id) {
  if (alpha_.empty()) throw Error(ErrorKind::Input, "shift vector must hold the reference entry");
  for (std::size_t i = 0; i < alpha_.size(); ++i) {
    if (!std::isfinite(alpha_[i]))
      throw Error(ErrorKind::Input, fmt::format("shift {} of block {} is not finite", i, block_id));
    alpha_[i] = wrap_angle(alpha_[i]);
  }
  if (alpha_[0] != 0.0) throw Error(ErrorKind::Input, "reference shift alpha[0] must be 0");
}

ShiftVector ShiftVector::from_free(std::span<const double> free, std::size_t block_id) {
  std::vector<double> alpha;
  alpha.reserve(free.size() + 1);
  alpha.push_back(0.0);
  alpha.insert(alpha.end(), free.begin(), free.end());
  return ShiftVector(std::move(alpha), block_id);
}

SpectralSet dft_coeffs(const CurveSet& set, const FrequencyGrid& grid, DftMethod method) {
  const std::size_t n = set.n();
  grid.validate_for(n);
  const int kmax = grid.k_max();
  const double inv_n = 1.0 / static_cast<double>(n);
  std::vector<std::vector<cplx>> coeffs(set.size(), std::vector<cplx>(grid.size()));

  if (method == DftMethod::Direct) {
    std::vector<cplx> twiddle(n);
    for (std::size_t j = 0; j < n; ++j) twiddle[j] = std::polar(1.0, -kTwoPi * static_cast<double>(j) * inv_n);
    for (std::size_t l = 0; l < set.size(); ++l) {
      const auto y = set.samples(l);
      for (int k = -kmax; k <= kmax; ++k) {
        const std::size_t kk = static_cast<std::size_t>((k % static_cast<long>(n) + static_cast<long>(n)) % static_cast<long>(n));
        cplx acc = 0.0;
        for (std::size_t m = 1; m <= n; ++m) acc += y[m - 1] * twiddle[(m * kk) % n];
        coeffs[l][grid.index_of(k)] = acc * inv_n;
      }
    }
  } else {
    // The sum runs over m = 1..n, i.e. one sample later than the FFT's index,
    // which costs a phase factor exp(-2 pi i k / n).
    for (std::size_t l = 0; l < set.size(); ++l) {
      const auto spectrum = fft::rfft(set.samples(l));
      for (int k = 0; k <= kmax; ++k) {
        const cplx f = spectrum[static_cast<std::size_t>(k)] *
                       std::polar(inv_n, -kTwoPi * static_cast<double>(k) * inv_n);
        coeffs[l][grid.index_of(k)] = f;
        if (k > 0) coeffs[l][grid.index_of(-k)] = std::conj(f);
      }
    }
  }
  return SpectralSet(grid, n, std::move(coeffs));
}

double block_avg_esd(const SpectralSet& spec, std::span<const std::size_t> block, const ShiftVector& shifts,
                     double lambda, int k) {
  check_block(spec, block, shifts, lambda);
  const double K = static_cast<double>(block.size() - 1);
  cplx z = lambda * spec.coeff(block[0], k);
  for (std::size_t j = 1; j < block.size(); ++j)
    z += std::polar(1.0, static_cast<double>(k) * shifts[j]) * spec.coeff(block[j], k);
  return std::norm(z / (K + lambda));
}

double cost(const SpectralSet& spec, std::span<const std::size_t> block, const ShiftVector& shifts,
            double lambda, const FrequencyWeights& weights) {
  check_block(spec, block, shifts, lambda);
  check_weights(spec, weights);
  BlockObjective obj(spec, block, lambda, weights);
  return obj.value(shifts.free());
}

std::vector<double> cost_gradient(const SpectralSet& spec, std::span<const std::size_t> block,
                                  const ShiftVector& shifts, double lambda, const FrequencyWeights& weights) {
  check_block(spec, block, shifts, lambda);
  check_weights(spec, weights);
  BlockObjective obj(spec, block, lambda, weights);
  std::vector<double> grad(obj.dimension());
  obj.value_and_gradient(shifts.free(), grad);
  return grad;
}

double cost_scale(const SpectralSet& spec, const FrequencyWeights& weights) {
  check_weights(spec, weights);
  double s = 0.0;
  const auto nu = weights.nu();
  const auto a = spec.mean_esd();
  for (std::size_t i = 0; i < nu.size(); ++i) s += nu[i] * a[i] * a[i];
  return s;
}

double deterministic_oracle(std::span<const double> cs_sq, const ShiftVector& theta, const ShiftVector& alpha,
                            double lambda, const FrequencyWeights& weights) {
  const auto& grid = weights.grid();
  if (cs_sq.size() != grid.size())
    throw Error(ErrorKind::Input, fmt::format("|c_s|^2 has {} entries, grid has {}", cs_sq.size(), grid.size()));
  if (theta.size() != alpha.size())
    throw Error(ErrorKind::Input, "theta and alpha must have equal length");
  if (!(lambda > 0.0)) throw Error(ErrorKind::Input, "lambda must be positive");
  const double K = static_cast<double>(alpha.size() - 1);
  double total = 0.0;
  for (int k = -grid.k_max(); k <= grid.k_max(); ++k) {
    const std::size_t idx = grid.index_of(k);
    const double w = weights.nu()[idx];
    if (w == 0.0) continue;
    cplx s = 0.0;
    for (std::size_t m = 0; m < alpha.size(); ++m) {
      const double weight = m == 0 ? lambda : 1.0;
      s += weight * std::polar(1.0, static_cast<double>(k) * (alpha[m] - theta[m]));
    }
    const double gap = std::norm(s / (K + lambda)) - 1.0;
    total += w * cs_sq[idx] * cs_sq[idx] * gap * gap;
  }
  return total;
}

nlohmann::json spectral_to_json(const SpectralSet& spec) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t l = 0; l < spec.curve_count(); ++l) {
    nlohmann::json row = nlohmann::json::array();
    for (const cplx& c : spec.row(l)) row.push_back({c.real(), c.imag()});
    rows.push_back(std::move(row));
  }
  return {{"n", spec.n()},
          {"k_max", spec.grid().k_max()},
          {"coeffs", std::move(rows)},
          {"mean_esd", std::vector<double>(spec.mean_esd().begin(), spec.mean_esd().end())}};
}

BlockObjective::BlockObjective(const SpectralSet& spec, std::span<const std::size_t> block, double lambda,
                               const FrequencyWeights& weights)
    : K_(block.size() - 1), lambda_(lambda) {
  if (block.empty() || block.front() != CurveSet::reference_index)
    throw Error(ErrorKind::Input, "block must start with the reference index 0");
  if (!(lambda > 0.0)) throw Error(ErrorKind::Input, "lambda must be positive");
  check_weights(spec, weights);
  inv_total_ = 1.0 / (static_cast<double>(K_) + lambda_);
  const auto& grid = spec.grid();
  for (int k = -grid.k_max(); k <= grid.k_max(); ++k) {
    const std::size_t idx = grid.index_of(k);
    if (weights.nu()[idx] == 0.0) continue;
    ks_.push_back(k);
    nu_.push_back(weights.nu()[idx]);
    a_.push_back(spec.mean_esd()[idx]);
    ref_.push_back(spec.row(block[0])[idx]);
    k_abs_max_ = std::max(k_abs_max_, std::abs(k));
  }
  const std::size_t nk = ks_.size();
  coeffs_.resize(K_ * nk);
  for (std::size_t j = 0; j < K_; ++j) {
    const auto row = spec.row(block[j + 1]);
    for (std::size_t q = 0; q < nk; ++q) coeffs_[j * nk + q] = row[grid.index_of(ks_[q])];
  }
  terms_.resize(K_ * nk);
  z_.resize(nk);
  resid_.resize(nk);
  powers_.resize(static_cast<std::size_t>(k_abs_max_) + 1);
}

double BlockObjective::evaluate(std::span<const double> free_alpha, bool keep_terms) {
  if (free_alpha.size() != K_)
    throw Error(ErrorKind::Input, fmt::format("expected {} shifts, got {}", K_, free_alpha.size()));
  const std::size_t nk = ks_.size();
  for (std::size_t q = 0; q < nk; ++q) z_[q] = lambda_ * ref_[q];
  for (std::size_t j = 0; j < K_; ++j) {
    const double a = free_alpha[j];
    if (!std::isfinite(a)) throw Error(ErrorKind::Input, fmt::format("shift {} is not finite", j + 1));
    // e^{ik alpha} by recurrence, re-anchored every 16 steps.
    const cplx base = std::polar(1.0, a);
    powers_[0] = 1.0;
    for (int k = 1; k <= k_abs_max_; ++k) {
      powers_[static_cast<std::size_t>(k)] = (k % 16 == 0) ? std::polar(1.0, static_cast<double>(k) * a)
                                                           : powers_[static_cast<std::size_t>(k - 1)] * base;
    }
    const cplx* c = &coeffs_[j * nk];
    cplx* t = &terms_[j * nk];
    for (std::size_t q = 0; q < nk; ++q) {
      const int k = ks_[q];
      const cplx p = k >= 0 ? powers_[static_cast<std::size_t>(k)] : std::conj(powers_[static_cast<std::size_t>(-k)]);
      const cplx term = p * c[q];
      if (keep_terms) t[q] = term;
      z_[q] += term;
    }
  }
  double total = 0.0;
  for (std::size_t q = 0; q < nk; ++q) {
    z_[q] *= inv_total_;
    resid_[q] = a_[q] - std::norm(z_[q]);
    total += nu_[q] * resid_[q] * resid_[q];
  }
  return total;
}

double BlockObjective::value(std::span<const double> free_alpha) { return evaluate(free_alpha, false); }

double BlockObjective::value_and_gradient(std::span<const double> free_alpha, std::span<double> grad) {
  const double v = evaluate(free_alpha, true);
  if (grad.size() != K_) throw Error(ErrorKind::Input, "gradient buffer has the wrong size");
  const std::size_t nk = ks_.size();
  // d cost / d alpha_j = sum_k nu_k 2 (A - B) (-dB/dalpha_j),
  // dB/dalpha_j = 2 Re(conj(z) i k t_jk / (K + lambda)) = -2 k Im(conj(z) t_jk) / (K + lambda).
  for (std::size_t j = 0; j < K_; ++j) {
    const cplx* t = &terms_[j * nk];
    double g = 0.0;
    for (std::size_t q = 0; q < nk; ++q) {
      const double im = std::conj(z_[q]).real() * t[q].imag() + std::conj(z_[q]).imag() * t[q].real();
      const double dB = -2.0 * static_cast<double>(ks_[q]) * im * inv_total_;
      g += nu_[q] * 2.0 * resid_[q] * (-dB);
    }
    grad[j] = g;
  }
  return v;
}

}  // namespace curvealign
