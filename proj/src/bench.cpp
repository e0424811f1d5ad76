#include "curvealign/bench.hpp"

#include <fmt/format.h>

#include <cmath>
#include <numbers>

#include "curvealign/baseline.hpp"
#include "curvealign/csv.hpp"
#include "curvealign/density.hpp"
#include "curvealign/error.hpp"
#include "curvealign/parallel.hpp"
#include "curvealign/rng.hpp"

namespace curvealign {

namespace {

template <class T>
T get_or(const nlohmann::json& j, const char* name, T fallback) {
  if (!j.contains(name)) return fallback;
  try {
    return j.at(name).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorKind::Config, fmt::format("field '{}' has the wrong type", name));
  }
}

double replicate_ise(const Dataset& ds, Method method, std::size_t K, const FrequencyWeights& weights,
                     const BenchConfig& c) {
  const AlignmentResult res = estimate_shifts(ds.curves, method, K, weights, c.align, c.lse, 1);
  std::vector<double> theta(res.theta_hat.size());
  for (std::size_t l = 0; l < theta.size(); ++l) theta[l] = wrap_angle(res.theta_hat[l] + c.shift_law.theta0);
  const double h = silverman_bandwidth(theta);
  const auto grid = uniform_grid(0.0, 2.0 * std::numbers::pi, c.grid_points);
  const UniformLaw law{c.shift_law.a, c.shift_law.b};
  return ise(kde(theta, h, grid), [&](double x) { return law.pdf(x); });
}

}  // namespace

std::string_view method_name(Method m) {
  switch (m) {
    case Method::Spectral: return "spectral";
    case Method::Lse: return "lse";
    case Method::Landmark: return "landmark";
  }
  return "spectral";
}

Method parse_method(std::string_view name) {
  if (name == "spectral") return Method::Spectral;
  if (name == "lse") return Method::Lse;
  if (name == "landmark") return Method::Landmark;
  throw Error(ErrorKind::Config, fmt::format("unknown method '{}'", name));
}

AlignmentResult estimate_shifts(const CurveSet& set, Method method, std::size_t K, const FrequencyWeights& weights,
                                const AlignConfig& align, const LseConfig& lse, unsigned threads) {
  switch (method) {
    case Method::Spectral: return align_curves(set, K, weights, align, threads);
    case Method::Lse: return lse_align(set, lse.max_rounds, lse.tol).alignment;
    case Method::Landmark: return landmark_align(set);
  }
  throw Error(ErrorKind::Input, "unknown method");
}

void BenchConfig::validate() const {
  if (sigma2.empty()) throw Error(ErrorKind::Config, "field 'sigma2' must list at least one noise level");
  if (K.empty()) throw Error(ErrorKind::Config, "field 'K' must list at least one block size");
  if (methods.empty()) throw Error(ErrorKind::Config, "field 'methods' must list at least one method");
  for (double s : sigma2)
    if (!(s >= 0.0)) throw Error(ErrorKind::Config, "field 'sigma2' entries must be >= 0");
  for (std::size_t k : K)
    if (k == 0) throw Error(ErrorKind::Config, "field 'K' entries must be >= 1");
  if (n_blocks == 0) throw Error(ErrorKind::Config, "field 'n_blocks' must be >= 1");
  if (replicates == 0) throw Error(ErrorKind::Config, "field 'replicates' must be >= 1");
  if (grid_points < 2) throw Error(ErrorKind::Config, "field 'grid_points' must be >= 2");
  if (nu_kmax < 1) throw Error(ErrorKind::Config, "field 'nu_kmax' must be >= 1");
  if (nu_kmax > FrequencyGrid::max_k_for(n))
    throw Error(ErrorKind::Config,
                fmt::format("field 'nu_kmax' = {} exceeds {} for n = {}", nu_kmax, FrequencyGrid::max_k_for(n), n));
  align.validate();
}

BenchConfig bench_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorKind::Config, "bench config must be a JSON object");
  BenchConfig c;
  c.sigma2 = get_or(j, "sigma2", c.sigma2);
  c.K = get_or(j, "K", c.K);
  c.n_blocks = get_or(j, "n_blocks", c.n_blocks);
  c.replicates = get_or(j, "replicates", c.replicates);
  if (j.contains("methods")) {
    c.methods.clear();
    for (const auto& name : get_or<std::vector<std::string>>(j, "methods", {})) c.methods.push_back(parse_method(name));
  }
  c.seed = get_or(j, "seed", c.seed);
  c.n = get_or(j, "n", c.n);
  c.on_grid = get_or(j, "on_grid", c.on_grid);
  c.nu_kmax = get_or(j, "nu_kmax", std::min(75, FrequencyGrid::max_k_for(c.n)));
  c.grid_points = get_or(j, "grid_points", c.grid_points);
  if (j.contains("pulse")) c.pulse = pulse_from_json(j.at("pulse"));
  if (j.contains("shift_law")) c.shift_law = shift_law_from_json(j.at("shift_law"));
  if (j.contains("align")) {
    const auto& a = j.at("align");
    c.align.beta = get_or(a, "beta", c.align.beta);
    if (a.contains("lambda") && !a.at("lambda").is_null()) c.align.lambda = get_or(a, "lambda", 1.0);
    c.align.max_iters = get_or(a, "max_iters", c.align.max_iters);
    c.align.grad_tol = get_or(a, "grad_tol", c.align.grad_tol);
    c.align.n_starts = get_or(a, "n_starts", c.align.n_starts);
    c.align.perturb_bins = get_or(a, "perturb_bins", c.align.perturb_bins);
    c.align.rng_seed = get_or(a, "rng_seed", c.align.rng_seed);
  }
  if (j.contains("lse")) {
    const auto& l = j.at("lse");
    c.lse.max_rounds = get_or(l, "max_rounds", c.lse.max_rounds);
    c.lse.tol = get_or(l, "tol", c.lse.tol);
  }
  c.validate();
  return c;
}

nlohmann::json bench_to_json(const BenchConfig& c) {
  nlohmann::json j;
  j["sigma2"] = c.sigma2;
  j["K"] = c.K;
  j["n_blocks"] = c.n_blocks;
  j["replicates"] = c.replicates;
  auto methods = nlohmann::json::array();
  for (Method m : c.methods) methods.push_back(std::string(method_name(m)));
  j["methods"] = methods;
  j["seed"] = c.seed;
  j["n"] = c.n;
  j["on_grid"] = c.on_grid;
  j["nu_kmax"] = c.nu_kmax;
  j["grid_points"] = c.grid_points;
  j["pulse"] = pulse_to_json(c.pulse);
  j["shift_law"] = shift_law_to_json(c.shift_law);
  j["align"] = {{"beta", c.align.beta},
                {"lambda", c.align.lambda ? nlohmann::json(*c.align.lambda) : nlohmann::json(nullptr)},
                {"max_iters", c.align.max_iters},
                {"grad_tol", c.align.grad_tol},
                {"n_starts", c.align.n_starts},
                {"perturb_bins", c.align.perturb_bins},
                {"rng_seed", c.align.rng_seed}};
  j["lse"] = {{"max_rounds", c.lse.max_rounds}, {"tol", c.lse.tol}};
  return j;
}

std::uint64_t replicate_seed(std::uint64_t master, std::size_t K, std::size_t r) {
  return derive_seed(master, {kStreamReplicate, K, r});
}

BenchResult run_bench(const BenchConfig& c, unsigned threads) {
  c.validate();
  const FrequencyWeights weights = FrequencyWeights::flat(c.nu_kmax);
  const std::vector<double> pulse = gen_pulse(c.pulse, c.n);
  const std::size_t cells = c.sigma2.size() * c.K.size();
  const std::size_t R = c.replicates;
  const std::size_t methods = c.methods.size();
  std::vector<double> ise_values(cells * R * methods);

  parallel_for(cells * R, threads, [&](std::size_t task) {
    const std::size_t cell = task / R;
    const std::size_t r = task % R;
    const double s2 = c.sigma2[cell / c.K.size()];
    const std::size_t K = c.K[cell % c.K.size()];
    const NoiseSpec noise{s2, replicate_seed(c.seed, K, r)};
    const Dataset ds = gen_dataset(pulse, c.pulse.support_end(), c.shift_law, noise, c.n_blocks * K, c.on_grid);
    for (std::size_t m = 0; m < methods; ++m)
      ise_values[(cell * R + r) * methods + m] = replicate_ise(ds, c.methods[m], K, weights, c);
  });

  BenchResult out;
  for (std::size_t cell = 0; cell < cells; ++cell) {
    for (std::size_t m = 0; m < methods; ++m) {
      BenchRow row;
      row.sigma2 = c.sigma2[cell / c.K.size()];
      row.K = c.K[cell % c.K.size()];
      row.method = c.methods[m];
      row.n_replicates = R;
      row.seed = c.seed;
      for (std::size_t r = 0; r < R; ++r) row.ise.push_back(ise_values[(cell * R + r) * methods + m]);
      row.mise = mise(row.ise);
      out.rows.push_back(std::move(row));
    }
  }
  return out;
}

std::string format_mise_table(const BenchResult& result) {
  std::string out = "sigma2,K,method,mise,n_replicates,seed\n";
  for (const auto& r : result.rows)
    out += fmt::format("{},{},{},{},{},{}\n", csv::format_double(r.sigma2), r.K, method_name(r.method),
                       csv::format_double(r.mise), r.n_replicates, r.seed);
  return out;
}

}  // namespace curvealign
