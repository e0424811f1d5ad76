#include "curvealign/cli.hpp"

#include <fmt/format.h>

#include <CLI11.hpp>
#include <chrono>
#include <filesystem>
#include <iostream>
#include <numbers>
#include <optional>

#include "curvealign/bench.hpp"
#include "curvealign/csv.hpp"
#include "curvealign/density.hpp"
#include "curvealign/error.hpp"
#include "curvealign/simgen.hpp"

namespace curvealign::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct AlignParams {
  fs::path input;
  Method method = Method::Spectral;
  std::optional<std::size_t> K;
  std::optional<double> epsilon;
  std::optional<fs::path> truth;
  /// Defaults to min(75, largest admissible k).
  std::optional<int> nu_kmax;
  AlignConfig align;
  LseConfig lse;
};

struct DensityParams {
  fs::path input;
  std::string column = "theta_hat";
  std::optional<double> bandwidth;
  double theta0 = 0.0;
  std::size_t grid_points = 1024;
};

struct SegmentParams {
  fs::path input;
  std::size_t window = 0;
  std::size_t min_separation = 1;
  double threshold = 0.0;
};

fs::path absolute_path(const fs::path& p) { return fs::absolute(p).lexically_normal(); }

template <class T>
json opt_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

json path_json(const std::optional<fs::path>& p) { return p ? json(p->string()) : json(nullptr); }

template <class T>
T param(const json& j, const char* name) {
  if (!j.contains(name)) throw Error(ErrorKind::Config, fmt::format("manifest lacks field 'params.{}'", name));
  try {
    return j.at(name).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorKind::Config, fmt::format("manifest field 'params.{}' has the wrong type", name));
  }
}

template <class T>
std::optional<T> opt_param(const json& j, const char* name) {
  if (!j.contains(name) || j.at(name).is_null()) return std::nullopt;
  return param<T>(j, name);
}

json read_json(const fs::path& path) {
  const std::string text = csv::read_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Config, fmt::format("'{}' is not valid JSON: {}", path.string(), e.what()));
  }
}

void prepare_out(const fs::path& out) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw Error(ErrorKind::Io, fmt::format("cannot create '{}': {}", out.string(), ec.message()));
}

void write_json(const fs::path& path, const json& j) { csv::write_file(path, j.dump(2) + "\n"); }

void write_manifest(const fs::path& out, std::string_view command, const json& params) {
  json m;
  m["tool"] = "curvealign";
  m["version"] = kVersion;
  m["command"] = command;
  m["params"] = params;
  write_json(out / "manifest.json", m);
}

// ---- simulate -------------------------------------------------------------

void simulate(const ScenarioSpec& spec, const fs::path& out) {
  const Dataset ds = run_scenario(spec);
  prepare_out(out);
  save_curves(out / "curves.csv", ds.curves);
  std::string truth = "curve_id,theta,theta_rel\n";
  for (std::size_t l = 0; l < ds.theta.size(); ++l)
    truth += fmt::format("{},{},{}\n", l, csv::format_double(ds.theta[l]), csv::format_double(ds.theta_relative[l]));
  csv::write_file(out / "true_shifts.csv", truth);
  write_manifest(out, "simulate", scenario_to_json(spec));
  std::cout << fmt::format("simulated {} curves of {} samples into {}\n", ds.curves.size(), ds.curves.n(),
                           out.string());
}

// ---- align ----------------------------------------------------------------

json align_to_json(const AlignParams& p) {
  return {{"input", p.input.string()},
          {"method", std::string(method_name(p.method))},
          {"K", opt_json(p.K)},
          {"epsilon", opt_json(p.epsilon)},
          {"truth", path_json(p.truth)},
          {"nu_kmax", opt_json(p.nu_kmax)},
          {"beta", p.align.beta},
          {"lambda", opt_json(p.align.lambda)},
          {"max_iters", p.align.max_iters},
          {"grad_tol", p.align.grad_tol},
          {"n_starts", p.align.n_starts},
          {"perturb_bins", p.align.perturb_bins},
          {"seed", p.align.rng_seed},
          {"lse_max_rounds", p.lse.max_rounds},
          {"lse_tol", p.lse.tol}};
}

AlignParams align_from_json(const json& j) {
  AlignParams p;
  p.input = param<std::string>(j, "input");
  p.method = parse_method(param<std::string>(j, "method"));
  p.K = opt_param<std::size_t>(j, "K");
  p.epsilon = opt_param<double>(j, "epsilon");
  if (auto t = opt_param<std::string>(j, "truth")) p.truth = *t;
  p.nu_kmax = opt_param<int>(j, "nu_kmax");
  p.align.beta = param<double>(j, "beta");
  p.align.lambda = opt_param<double>(j, "lambda");
  p.align.max_iters = param<int>(j, "max_iters");
  p.align.grad_tol = param<double>(j, "grad_tol");
  p.align.n_starts = param<int>(j, "n_starts");
  p.align.perturb_bins = param<int>(j, "perturb_bins");
  p.align.rng_seed = param<std::uint64_t>(j, "seed");
  p.lse.max_rounds = param<int>(j, "lse_max_rounds");
  p.lse.tol = param<double>(j, "lse_tol");
  return p;
}

std::vector<std::size_t> divisors(std::size_t m) {
  std::vector<std::size_t> out;
  for (std::size_t d = 1; d <= m; ++d)
    if (m % d == 0) out.push_back(d);
  return out;
}

void align(const AlignParams& p, const fs::path& out, unsigned threads) {
  p.align.validate();
  const CurveSet set = load_curves(p.input);
  const int nu_kmax = p.nu_kmax.value_or(std::min(75, FrequencyGrid::max_k_for(set.n())));
  const FrequencyGrid grid(nu_kmax);
  grid.validate_for(set.n());
  const FrequencyWeights weights = FrequencyWeights::flat(nu_kmax);

  json diag;
  diag["method"] = method_name(p.method);
  diag["M"] = set.M();
  diag["n"] = set.n();

  std::size_t K = 0;
  if (p.K) {
    K = *p.K;
  } else if (p.epsilon) {
    const SpectralSet spectra = dft_coeffs(set, grid);
    const BlockSizeChoice choice = select_block_size(spectra, weights, *p.epsilon, divisors(set.M()));
    K = choice.K;
    diag["block_size_rule"] = {{"epsilon", *p.epsilon},
                               {"K", choice.K},
                               {"criterion", choice.criterion},
                               {"threshold_unmet", choice.threshold_unmet}};
  } else if (p.method == Method::Spectral) {
    throw Error(ErrorKind::Input, "the spectral method needs --k or --epsilon");
  } else {
    K = set.M();
  }
  if (p.method == Method::Spectral) make_blocks(set, K);

  const AlignmentResult res = estimate_shifts(set, p.method, K, weights, p.align, p.lse, threads);

  std::string shifts = "curve_id,block_id,theta_hat,objective,method\n";
  for (std::size_t l = 0; l < res.theta_hat.size(); ++l) {
    const std::size_t b = res.block_of.empty() ? 0 : res.block_of[l];
    const double obj = b < res.block_objective.size() ? res.block_objective[b] : 0.0;
    shifts += fmt::format("{},{},{},{},{}\n", set.curves()[l].id, b, csv::format_double(res.theta_hat[l]),
                          csv::format_double(obj), method_name(p.method));
  }

  const std::vector<double> mean = aligned_mean(set, res.theta_hat);
  std::string mean_csv = "t,s_hat\n";
  for (std::size_t i = 0; i < mean.size(); ++i)
    mean_csv += fmt::format("{},{}\n", csv::format_double(sample_time(i, set.n())), csv::format_double(mean[i]));

  if (p.method == Method::Spectral) {
    diag["K"] = res.K;
    diag["lambda"] = res.lambda;
    diag["nu_kmax"] = nu_kmax;
    auto blocks = json::array();
    for (std::size_t b = 0; b < res.block_objective.size(); ++b)
      blocks.push_back({{"block_id", b},
                        {"initial_objective", res.block_initial_objective[b]},
                        {"objective", res.block_objective[b]},
                        {"iterations", res.block_iterations[b]},
                        {"converged", static_cast<bool>(res.block_converged[b])}});
    diag["blocks"] = blocks;
  } else if (!res.block_objective.empty()) {
    diag["objective"] = res.block_objective.front();
    diag["iterations"] = res.block_iterations.front();
    diag["converged"] = static_cast<bool>(res.block_converged.front());
  }

  if (p.truth) {
    const csv::Table table = csv::read_table(*p.truth);
    const std::vector<double> truth = table.values("theta_rel");
    if (truth.size() != res.theta_hat.size())
      throw Error(ErrorKind::Input, fmt::format("truth file has {} shifts for {} curves", truth.size(),
                                                res.theta_hat.size()));
    const double bin = bin_width(set.n());
    const ErrorSummary err = circular_error(res.theta_hat, truth, bin);
    diag["error"] = {{"rms", err.rms},
                     {"max", err.max},
                     {"rms_bins", err.rms / bin},
                     {"max_bins", err.max / bin},
                     {"fraction_beyond_one_bin", err.fraction_beyond}};
    if (p.method == Method::Spectral) {
      const BlockPlan plan = make_blocks(set, K);
      auto offsets = json::array();
      const auto bo = block_offsets(res.theta_hat, truth, plan);
      for (std::size_t b = 0; b < bo.size(); ++b)
        offsets.push_back({{"block_id", b}, {"offset", bo[b].offset}, {"dispersion", bo[b].dispersion}});
      diag["block_offsets"] = offsets;
    }
  }

  prepare_out(out);
  csv::write_file(out / "shifts.csv", shifts);
  csv::write_file(out / "aligned_mean.csv", mean_csv);
  write_json(out / "diagnostics.json", diag);
  write_manifest(out, "align", align_to_json(p));
  std::cout << fmt::format("aligned {} curves ({}) into {}\n", set.size(), method_name(p.method), out.string());
}

// ---- density --------------------------------------------------------------

json density_to_json(const DensityParams& p) {
  return {{"input", p.input.string()},
          {"column", p.column},
          {"bandwidth", opt_json(p.bandwidth)},
          {"theta0", p.theta0},
          {"grid_points", p.grid_points}};
}

DensityParams density_from_json(const json& j) {
  DensityParams p;
  p.input = param<std::string>(j, "input");
  p.column = param<std::string>(j, "column");
  p.bandwidth = opt_param<double>(j, "bandwidth");
  p.theta0 = param<double>(j, "theta0");
  p.grid_points = param<std::size_t>(j, "grid_points");
  return p;
}

void density(const DensityParams& p, const fs::path& out) {
  if (p.grid_points < 2) throw Error(ErrorKind::Input, "grid_points must be >= 2");
  const csv::Table table = csv::read_table(p.input);
  std::vector<double> theta = table.values(p.column);
  if (theta.empty()) throw Error(ErrorKind::InsufficientData, fmt::format("'{}' holds no shifts", p.input.string()));
  for (double& t : theta) t = wrap_angle(t + p.theta0);
  const double h = p.bandwidth ? *p.bandwidth : silverman_bandwidth(theta);
  const auto grid = uniform_grid(0.0, 2.0 * std::numbers::pi, p.grid_points);
  const DensityEstimate est = kde(theta, h, grid);

  std::string text = "x,f_hat\n";
  for (std::size_t i = 0; i < est.grid.size(); ++i)
    text += fmt::format("{},{}\n", csv::format_double(est.grid[i]), csv::format_double(est.values[i]));
  prepare_out(out);
  csv::write_file(out / "density.csv", text);
  write_json(out / "density.json", {{"bandwidth", h},
                                    {"bandwidth_rule", p.bandwidth ? "fixed" : "silverman"},
                                    {"sample_count", est.sample_count},
                                    {"integral", trapezoid(est.grid, est.values)}});
  write_manifest(out, "density", density_to_json(p));
  std::cout << fmt::format("density of {} shifts with bandwidth {} into {}\n", theta.size(), csv::format_double(h),
                           out.string());
}

// ---- bench ----------------------------------------------------------------

void bench(const BenchConfig& c, const fs::path& out, unsigned threads) {
  const auto start = std::chrono::steady_clock::now();
  const BenchResult res = run_bench(c, threads);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  std::string reps = "sigma2,K,method,replicate,seed,ise\n";
  for (const auto& row : res.rows)
    for (std::size_t r = 0; r < row.ise.size(); ++r)
      reps += fmt::format("{},{},{},{},{},{}\n", csv::format_double(row.sigma2), row.K, method_name(row.method), r,
                          replicate_seed(c.seed, row.K, r), csv::format_double(row.ise[r]));
  prepare_out(out);
  csv::write_file(out / "mise_table.csv", format_mise_table(res));
  csv::write_file(out / "ise_replicates.csv", reps);
  csv::write_file(out / "runtime.txt", fmt::format("seconds {:.3f}\nthreads {}\n", seconds, threads));
  write_manifest(out, "bench", bench_to_json(c));
  std::cout << fmt::format("bench: {} rows in {:.1f} s into {}\n", res.rows.size(), seconds, out.string());
}

// ---- segment --------------------------------------------------------------

json segment_to_json(const SegmentParams& p) {
  return {{"input", p.input.string()},
          {"window", p.window},
          {"min_separation", p.min_separation},
          {"threshold", p.threshold}};
}

SegmentParams segment_from_json(const json& j) {
  SegmentParams p;
  p.input = param<std::string>(j, "input");
  p.window = param<std::size_t>(j, "window");
  p.min_separation = param<std::size_t>(j, "min_separation");
  p.threshold = param<double>(j, "threshold");
  return p;
}

void segment(const SegmentParams& p, const fs::path& out) {
  const std::vector<double> signal = csv::read_numbers(p.input);
  const CurveSet set = segment_maxima(signal, p.window, p.min_separation, p.threshold);
  prepare_out(out);
  save_curves(out / "curves.csv", set);
  write_manifest(out, "segment", segment_to_json(p));
  std::cout << fmt::format("segmented {} windows into {}\n", set.size(), out.string());
}

// ---- rerun ----------------------------------------------------------------

void rerun(const fs::path& manifest, const fs::path& out, unsigned threads) {
  const json m = read_json(manifest);
  if (!m.is_object() || !m.contains("command") || !m.contains("params"))
    throw Error(ErrorKind::Config, fmt::format("'{}' is not a manifest", manifest.string()));
  const std::string command = m.at("command").get<std::string>();
  const json& params = m.at("params");
  if (command == "simulate") {
    simulate(scenario_from_json(params), out);
  } else if (command == "align") {
    align(align_from_json(params), out, threads);
  } else if (command == "density") {
    density(density_from_json(params), out);
  } else if (command == "bench") {
    bench(bench_from_json(params), out, threads);
  } else if (command == "segment") {
    segment(segment_from_json(params), out);
  } else {
    throw Error(ErrorKind::Config, fmt::format("unknown manifest command '{}'", command));
  }
}

int dispatch(int argc, const char* const* argv) {
  CLI::App app{"Shift estimation for repeated noisy pulses"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  std::string out;
  unsigned threads = 1;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--out", out, "Output directory")->required();
    sub->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
  };

  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<double> sigma2;
  auto* sim = app.add_subcommand("simulate", "Generate a synthetic curve set from a scenario config");
  sim->add_option("--config,--input", config, "Scenario JSON")->required();
  sim->add_option("--seed", seed, "Override the master seed");
  sim->add_option("--sigma2", sigma2, "Override the noise variance");
  add_common(sim);

  AlignParams ap;
  std::string input;
  std::string method = "spectral";
  std::string truth;
  std::optional<std::size_t> k_opt;
  std::optional<double> eps_opt, lambda_opt;
  auto* al = app.add_subcommand("align", "Estimate shifts of a curve set");
  al->add_option("--input", input, "Wide-csv curves")->required();
  al->add_option("--k", k_opt, "Block size K");
  al->add_option("--epsilon", eps_opt, "Choose K by the block-size rule with this threshold");
  al->add_option("--beta", ap.align.beta, "lambda = floor(K^beta)")->capture_default_str();
  al->add_option("--lambda", lambda_opt, "Fixed reference weight");
  al->add_option("--method", method, "spectral, lse or landmark")->capture_default_str();
  al->add_option("--truth", truth, "True shifts CSV (column theta_rel)");
  al->add_option("--nu-kmax", ap.nu_kmax, "Largest frequency with weight 1 (default min(75, bound for n))");
  al->add_option("--seed", ap.align.rng_seed, "Seed of the random restarts")->capture_default_str();
  al->add_option("--max-iters", ap.align.max_iters)->capture_default_str();
  al->add_option("--starts", ap.align.n_starts)->capture_default_str();
  add_common(al);

  DensityParams dp;
  std::optional<double> bw_opt;
  auto* de = app.add_subcommand("density", "Kernel density estimate of estimated shifts");
  de->add_option("--input", input, "Shifts CSV")->required();
  de->add_option("--column", dp.column, "Column holding the shifts")->capture_default_str();
  de->add_option("--bandwidth", bw_opt, "Fixed bandwidth (default: Silverman)");
  de->add_option("--theta0", dp.theta0, "Added to every shift before estimation")->capture_default_str();
  add_common(de);

  std::optional<std::size_t> reps;
  std::vector<double> sigma2_grid;
  auto* be = app.add_subcommand("bench", "Monte Carlo MISE table");
  be->add_option("--config,--input", config, "Bench JSON (defaults when omitted)");
  be->add_option("--replicates", reps, "Override the replicate count");
  be->add_option("--seed", seed, "Override the master seed");
  be->add_option("--sigma2", sigma2_grid, "Override the noise grid");
  add_common(be);

  SegmentParams sp;
  auto* se = app.add_subcommand("segment", "Cut a long recording into windows around its maxima");
  se->add_option("--input", input, "Numbers, any layout")->required();
  se->add_option("--window", sp.window, "Window length in samples")->required();
  se->add_option("--min-separation", sp.min_separation, "Minimum peak distance in samples")->capture_default_str();
  se->add_option("--threshold", sp.threshold, "Peaks must exceed this value")->capture_default_str();
  add_common(se);

  std::string manifest;
  auto* re = app.add_subcommand("rerun", "Reproduce a command from its manifest");
  re->add_option("--manifest,--input", manifest, "manifest.json")->required();
  add_common(re);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (sim->parsed()) {
    ScenarioSpec spec = scenario_from_json(read_json(config));
    if (seed) spec.noise.seed = *seed;
    if (sigma2) spec.noise.sigma2 = *sigma2;
    simulate(spec, out);
  } else if (al->parsed()) {
    ap.input = absolute_path(input);
    ap.method = parse_method(method);
    ap.K = k_opt;
    ap.epsilon = eps_opt;
    ap.align.lambda = lambda_opt;
    if (!truth.empty()) ap.truth = absolute_path(truth);
    align(ap, out, threads);
  } else if (de->parsed()) {
    dp.input = absolute_path(input);
    dp.bandwidth = bw_opt;
    density(dp, out);
  } else if (be->parsed()) {
    BenchConfig c = config.empty() ? BenchConfig{} : bench_from_json(read_json(config));
    if (reps) c.replicates = *reps;
    if (seed) c.seed = *seed;
    if (!sigma2_grid.empty()) c.sigma2 = sigma2_grid;
    c.validate();
    bench(c, out, threads);
  } else if (se->parsed()) {
    sp.input = absolute_path(input);
    segment(sp, out);
  } else if (re->parsed()) {
    rerun(manifest, out, threads);
  }
  return 0;
}

}  // namespace

int run(int argc, char** argv) {
  try {
    return dispatch(argc, argv);
  } catch (const Error& e) {
    std::cerr << "curvealign: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "curvealign: " << e.what() << "\n";
    return 4;
  }
}

int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"curvealign"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    return dispatch(static_cast<int>(argv.size()), argv.data());
  } catch (const Error& e) {
    std::cerr << "curvealign: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "curvealign: " << e.what() << "\n";
    return 4;
  }
}

}  // namespace curvealign::cli
