#pragma once

#include <cstddef>
#include <cstdint>
#include <json.hpp>
#include <string>
#include <string_view>
#include <vector>

#include "curvealign/align.hpp"
#include "curvealign/simgen.hpp"

namespace curvealign {

enum class Method { Spectral, Lse, Landmark };

std::string_view method_name(Method m);
/// Throws Error(Config) for an unknown name.
Method parse_method(std::string_view name);

struct LseConfig {
  int max_rounds = 50;
  double tol = 1e-6;
};

/// Shifts relative to the reference for any of the three methods. K only
/// matters for the spectral method.
AlignmentResult estimate_shifts(const CurveSet& set, Method method, std::size_t K, const FrequencyWeights& weights,
                                const AlignConfig& align, const LseConfig& lse, unsigned threads = 1);

/// Monte Carlo MISE protocol: for every (sigma2, K) cell, R replicates of
/// M = n_blocks * K curves with fresh shifts and noise; each method sees the
/// same datasets. Densities use Silverman's bandwidth on the absolute shift
/// estimates theta_hat + theta0 and are scored against the uniform law.
struct BenchConfig {
  std::vector<double> sigma2{0.0, 1e-4, 1e-2, 1.0};
  std::vector<std::size_t> K{10, 30};
  std::size_t n_blocks = 20;
  std::size_t replicates = 50;
  std::vector<Method> methods{Method::Spectral, Method::Lse};
  std::uint64_t seed = 1;
  std::size_t n = 512;
  bool on_grid = false;
  /// A config without this field gets min(75, largest admissible k for n).
  int nu_kmax = 75;
  PulseSpec pulse = PulseSpec::hodgkin_huxley();
  ShiftLawSpec shift_law;
  AlignConfig align;
  LseConfig lse;
  std::size_t grid_points = 1024;

  /// Throws Error(Config) on an empty grid or invalid entry.
  void validate() const;
};

BenchConfig bench_from_json(const nlohmann::json& j);
nlohmann::json bench_to_json(const BenchConfig& c);

/// Seed of replicate r in the cells with block size K; shared across noise levels
/// so the rows of a table see the same shift draws.
std::uint64_t replicate_seed(std::uint64_t master, std::size_t K, std::size_t r);

struct BenchRow {
  double sigma2 = 0.0;
  std::size_t K = 0;
  Method method = Method::Spectral;
  double mise = 0.0;
  std::size_t n_replicates = 0;
  std::uint64_t seed = 0;
  std::vector<double> ise;
};

struct BenchResult {
  std::vector<BenchRow> rows;
};

/// Output is independent of `threads`.
BenchResult run_bench(const BenchConfig& config, unsigned threads = 1);

/// sigma2,K,method,mise,n_replicates,seed
std::string format_mise_table(const BenchResult& result);

}  // namespace curvealign
