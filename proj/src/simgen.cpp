#include "curvealign/simgen.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "curvealign/error.hpp"
#include "curvealign/fft.hpp"
#include "curvealign/rng.hpp"
#include "curvealign/spectral.hpp"

namespace curvealign {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// z / (e^z - 1), continuous at 0.
double efun(double z) {
  if (std::abs(z) < 1e-6) return 1.0 - z / 2.0;
  return z / std::expm1(z);
}

struct HhState {
  double v, m, h, n;
};

struct HhRates {
  double am, bm, ah, bh, an, bn;
};

HhRates rates(double v) {
  HhRates r{};
  r.am = efun(-(v + 40.0) / 10.0);
  r.bm = 4.0 * std::exp(-(v + 65.0) / 18.0);
  r.ah = 0.07 * std::exp(-(v + 65.0) / 20.0);
  r.bh = 1.0 / (1.0 + std::exp(-(v + 35.0) / 10.0));
  r.an = 0.1 * efun(-(v + 55.0) / 10.0);
  r.bn = 0.125 * std::exp(-(v + 65.0) / 80.0);
  return r;
}

HhState derivative(const HhState& s, double current, const HodgkinHuxleyParams& p) {
  const HhRates r = rates(s.v);
  const double i_na = p.g_na * s.m * s.m * s.m * s.h * (s.v - p.e_na);
  const double i_k = p.g_k * s.n * s.n * s.n * s.n * (s.v - p.e_k);
  const double i_l = p.g_l * (s.v - p.e_l);
  return HhState{(current - i_na - i_k - i_l) / p.c_m, r.am * (1.0 - s.m) - r.bm * s.m,
                 r.ah * (1.0 - s.h) - r.bh * s.h, r.an * (1.0 - s.n) - r.bn * s.n};
}

HhState axpy(const HhState& s, const HhState& d, double h) {
  return HhState{s.v + h * d.v, s.m + h * d.m, s.h + h * d.h, s.n + h * d.n};
}

double normal(Rng& rng, double sd) {
  if (sd == 0.0) return 0.0;
  std::normal_distribution<double> dist(0.0, sd);
  return dist(rng);
}

std::vector<double> hh_pulse(const PulseSpec& spec, std::size_t n) {
  const auto& p = spec.hh;
  const MembraneTrace trace = simulate_hodgkin_huxley(p);
  const int spikes = count_spikes(trace);
  if (spikes != 1)
    throw Error(ErrorKind::NoSpike, fmt::format("stimulus of {} uA/cm^2 for {} ms produced {} spikes, expected 1",
                                                p.stim_amplitude, p.stim_duration, spikes));
  const double rest = trace.voltage.front();
  const double peak = *std::max_element(trace.voltage.begin(), trace.voltage.end());
  const double taper_start = (1.0 - p.taper_fraction) * p.duration;

  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = sample_time(i, n);
    if (t > spec.support) break;
    const double tau = t / spec.support * p.duration;
    const double pos = tau / p.dt;
    const auto lo = std::min(static_cast<std::size_t>(pos), trace.voltage.size() - 1);
    const std::size_t hi = std::min(lo + 1, trace.voltage.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    const double v = trace.voltage[lo] + frac * (trace.voltage[hi] - trace.voltage[lo]);
    double u = (v - rest) / (peak - rest);
    if (p.taper_fraction > 0.0 && tau > taper_start) {
      const double x = std::min(1.0, (tau - taper_start) / (p.duration - taper_start));
      u *= 0.5 * (1.0 + std::cos(std::numbers::pi * x));
    }
    out[i] = u;
  }
  const double top = *std::max_element(out.begin(), out.end());
  if (!(top > 0.0)) throw Error(ErrorKind::NoSpike, "spike not resolved by the sample grid");
  for (double& v : out) v /= top;
  return out;
}

void check_assumption(double pulse_begin, double pulse_end, const ShiftLawSpec& law) {
  if (!(law.a < law.b)) throw Error(ErrorKind::Assumption, fmt::format("shift law needs a < b, got [{}, {}]", law.a, law.b));
  if (!(pulse_begin >= 0.0))
    throw Error(ErrorKind::Assumption, fmt::format("pulse support starts at {} < 0", pulse_begin));
  if (!(law.a > 0.0 && law.b + pulse_end < kTwoPi))
    throw Error(ErrorKind::Assumption,
                fmt::format("shift support [{}, {}] plus pulse support {} must stay inside (0, 2pi)", law.a, law.b,
                            pulse_end));
  if (!(law.theta0 >= 0.0 && law.theta0 + pulse_end < kTwoPi))
    throw Error(ErrorKind::Assumption,
                fmt::format("reference shift {} plus pulse support {} must stay inside [0, 2pi)", law.theta0, pulse_end));
}

double draw_shift(const ShiftLawSpec& law, Rng& rng, std::size_t n) {
  if (law.kind == ShiftLawKind::Uniform) {
    std::uniform_real_distribution<double> dist(law.a, law.b);
    return dist(rng);
  }
  const double bin = bin_width(n);
  const auto lo = static_cast<long>(std::ceil(law.a / bin));
  const auto hi = static_cast<long>(std::floor(law.b / bin));
  if (hi < lo) throw Error(ErrorKind::Assumption, "discrete shift law has no grid point in [a, b]");
  std::uniform_int_distribution<long> dist(lo, hi);
  return static_cast<double>(dist(rng)) * bin;
}

template <class T>
T field(const nlohmann::json& j, const char* name, const std::string& where, T fallback) {
  if (!j.contains(name)) return fallback;
  try {
    return j.at(name).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorKind::Config, fmt::format("field '{}{}' has the wrong type", where, name));
  }
}

template <class T>
T required(const nlohmann::json& j, const char* name, const std::string& where) {
  if (!j.is_object() || !j.contains(name))
    throw Error(ErrorKind::Config, fmt::format("missing required field '{}{}'", where, name));
  try {
    return j.at(name).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorKind::Config, fmt::format("field '{}{}' has the wrong type", where, name));
  }
}

}  // namespace

MembraneTrace simulate_hodgkin_huxley(const HodgkinHuxleyParams& p) {
  if (!(p.dt > 0.0) || !(p.duration > p.dt)) throw Error(ErrorKind::Input, "invalid integration span");
  const HhRates r0 = rates(p.v_rest);
  HhState s{p.v_rest, r0.am / (r0.am + r0.bm), r0.ah / (r0.ah + r0.bh), r0.an / (r0.an + r0.bn)};
  const auto steps = static_cast<std::size_t>(std::llround(p.duration / p.dt));
  MembraneTrace trace;
  trace.time.reserve(steps + 1);
  trace.voltage.reserve(steps + 1);
  trace.time.push_back(0.0);
  trace.voltage.push_back(s.v);
  const double h = p.dt;
  auto current_at = [&](double t) { return t < p.stim_duration ? p.stim_amplitude : 0.0; };
  for (std::size_t i = 0; i < steps; ++i) {
    const double t = static_cast<double>(i) * h;
    const HhState k1 = derivative(s, current_at(t), p);
    const HhState k2 = derivative(axpy(s, k1, h / 2), current_at(t + h / 2), p);
    const HhState k3 = derivative(axpy(s, k2, h / 2), current_at(t + h / 2), p);
    const HhState k4 = derivative(axpy(s, k3, h), current_at(t + h), p);
    s.v += h / 6.0 * (k1.v + 2 * k2.v + 2 * k3.v + k4.v);
    s.m += h / 6.0 * (k1.m + 2 * k2.m + 2 * k3.m + k4.m);
    s.h += h / 6.0 * (k1.h + 2 * k2.h + 2 * k3.h + k4.h);
    s.n += h / 6.0 * (k1.n + 2 * k2.n + 2 * k3.n + k4.n);
    if (!std::isfinite(s.v)) throw Error(ErrorKind::Numerical, "membrane integration diverged");
    trace.time.push_back(static_cast<double>(i + 1) * h);
    trace.voltage.push_back(s.v);
  }
  return trace;
}

int count_spikes(const MembraneTrace& trace, double threshold_mv) {
  int count = 0;
  for (std::size_t i = 1; i < trace.voltage.size(); ++i)
    if (trace.voltage[i - 1] < threshold_mv && trace.voltage[i] >= threshold_mv) ++count;
  return count;
}

double PulseSpec::support_begin() const {
  switch (kind) {
    case PulseKind::Gaussian: return center - 6.0 * width;
    case PulseKind::RaisedCosine: return center - width;
    case PulseKind::HodgkinHuxley: return 0.0;
  }
  return 0.0;
}

double PulseSpec::support_end() const {
  switch (kind) {
    case PulseKind::Gaussian: return center + 6.0 * width;
    case PulseKind::RaisedCosine: return center + width;
    case PulseKind::HodgkinHuxley: return support;
  }
  return 0.0;
}

std::vector<double> gen_pulse(const PulseSpec& spec, std::size_t n) {
  if (n < CurveSet::min_samples) throw Error(ErrorKind::Input, fmt::format("n must be >= {}", CurveSet::min_samples));
  std::vector<double> out(n, 0.0);
  switch (spec.kind) {
    case PulseKind::Gaussian: {
      if (!(spec.width > 0.0)) throw Error(ErrorKind::Input, "gaussian width must be positive");
      for (std::size_t i = 0; i < n; ++i) {
        const double u = (sample_time(i, n) - spec.center) / spec.width;
        out[i] = std::exp(-0.5 * u * u);
      }
      return out;
    }
    case PulseKind::RaisedCosine: {
      if (!(spec.width > 0.0)) throw Error(ErrorKind::Input, "raised-cosine half-width must be positive");
      for (std::size_t i = 0; i < n; ++i) {
        const double u = (sample_time(i, n) - spec.center) / spec.width;
        out[i] = std::abs(u) < 1.0 ? 0.5 * (1.0 + std::cos(std::numbers::pi * u)) : 0.0;
      }
      return out;
    }
    case PulseKind::HodgkinHuxley:
      if (!(spec.support > 0.0 && spec.support < kTwoPi))
        throw Error(ErrorKind::Input, "hodgkin-huxley support must lie in (0, 2pi)");
      return hh_pulse(spec, n);
  }
  return out;
}

std::vector<double> circular_roll(std::span<const double> x, long d) {
  const auto n = static_cast<long>(x.size());
  std::vector<double> y(x.size());
  for (long i = 0; i < n; ++i) y[static_cast<std::size_t>(i)] = x[static_cast<std::size_t>(((i - d) % n + n) % n)];
  return y;
}

Dataset gen_dataset(std::vector<double> pulse, double support_end, const ShiftLawSpec& law, const NoiseSpec& noise,
                    std::size_t M, bool on_grid) {
  const std::size_t n = pulse.size();
  if (n < CurveSet::min_samples) throw Error(ErrorKind::Input, "pulse too short");
  if (!(noise.sigma2 >= 0.0)) throw Error(ErrorKind::Input, "noise variance must be >= 0");
  check_assumption(0.0, support_end, law);
  const double bin = bin_width(n);
  const double sigma = std::sqrt(noise.sigma2);

  Dataset ds;
  ds.theta.resize(M + 1);
  std::vector<SampledCurve> curves(M + 1);
  for (std::size_t l = 0; l <= M; ++l) {
    double theta = law.theta0;
    if (l > 0) {
      Rng rng(derive_seed(noise.seed, {kStreamShift, l}));
      theta = draw_shift(law, rng, n);
    }
    std::vector<double> y;
    if (on_grid) {
      const long d = std::lround(theta / bin);
      theta = static_cast<double>(d) * bin;
      y = circular_roll(pulse, d);
    } else {
      y = fft::shift_signal(pulse, theta);
    }
    if (sigma > 0.0) {
      Rng rng(derive_seed(noise.seed, {kStreamNoise, l}));
      std::normal_distribution<double> eps(0.0, 1.0);
      for (double& v : y) v += sigma * eps(rng);
    }
    ds.theta[l] = theta;
    curves[l] = SampledCurve{static_cast<int>(l), std::move(y)};
  }
  ds.curves = CurveSet(std::move(curves));
  ds.theta_relative.resize(M + 1);
  for (std::size_t l = 0; l <= M; ++l) ds.theta_relative[l] = wrap_angle(ds.theta[l] - ds.theta[0]);
  ds.pulse = std::move(pulse);
  return ds;
}

Dataset gen_dataset(const PulseSpec& pulse, const ShiftLawSpec& law, const NoiseSpec& noise, std::size_t M,
                    std::size_t n, bool on_grid) {
  check_assumption(pulse.support_begin(), pulse.support_end(), law);
  return gen_dataset(gen_pulse(pulse, n), pulse.support_end(), law, noise, M, on_grid);
}

CurveSet baseline_wander(const CurveSet& set, const WanderSpec& spec) {
  if (!(spec.frequency >= 0.0)) throw Error(ErrorKind::Input, "wander frequency must be >= 0");
  std::vector<SampledCurve> out = set.curves();
  const std::size_t n = set.n();
  const double record_len = static_cast<double>(n * out.size());
  for (std::size_t l = 0; l < out.size(); ++l) {
    auto& c = out[l];
    double phase = spec.phase;
    if (spec.random_phase) {
      Rng rng(derive_seed(spec.seed, {kStreamWander, static_cast<std::uint64_t>(c.id)}));
      phase += std::uniform_real_distribution<double>(0.0, kTwoPi)(rng);
    }
    for (std::size_t i = 0; i < n; ++i) {
      const double t = spec.span == WanderSpan::Curve
                           ? sample_time(i, n)
                           : kTwoPi * static_cast<double>(l * n + i) / record_len;
      c.samples[i] += spec.amplitude * std::sin(spec.frequency * t + phase);
    }
  }
  return CurveSet(std::move(out));
}

CurveSet powerline(const CurveSet& set, const PowerlineSpec& spec) {
  if (!(spec.fs > 0.0)) throw Error(ErrorKind::Input, "sampling frequency must be positive");
  if (spec.amp_jitter_sd < 0.0 || spec.freq_jitter_sd < 0.0)
    throw Error(ErrorKind::Input, "jitter standard deviations must be >= 0");
  std::vector<SampledCurve> out = set.curves();
  for (auto& c : out) {
    Rng rng(derive_seed(spec.seed, {kStreamPowerline, static_cast<std::uint64_t>(c.id)}));
    for (std::size_t i = 0; i < c.samples.size(); ++i) {
      const double xi_a = normal(rng, spec.amp_jitter_sd);
      const double xi_f = normal(rng, spec.freq_jitter_sd);
      c.samples[i] += (spec.a0 + xi_a) * std::sin(kTwoPi * (spec.f0 + xi_f) * static_cast<double>(i) / spec.fs);
    }
  }
  return CurveSet(std::move(out));
}

CurveSet apply_perturbation(const CurveSet& set, const Perturbation& p) {
  return std::visit(
      [&](const auto& spec) -> CurveSet {
        using T = std::decay_t<decltype(spec)>;
        if constexpr (std::is_same_v<T, WanderSpec>) {
          return baseline_wander(set, spec);
        } else {
          return powerline(set, spec);
        }
      },
      p);
}

nlohmann::json pulse_to_json(const PulseSpec& p) {
  nlohmann::json j;
  switch (p.kind) {
    case PulseKind::Gaussian:
      j = {{"kind", "gaussian"}, {"center", p.center}, {"width", p.width}};
      break;
    case PulseKind::RaisedCosine:
      j = {{"kind", "raised_cosine"}, {"center", p.center}, {"width", p.width}};
      break;
    case PulseKind::HodgkinHuxley:
      j = {{"kind", "hodgkin_huxley"},
           {"support", p.support},
           {"hh",
            {{"stim_amplitude", p.hh.stim_amplitude},
             {"stim_duration", p.hh.stim_duration},
             {"duration", p.hh.duration},
             {"dt", p.hh.dt},
             {"taper_fraction", p.hh.taper_fraction}}}};
      break;
  }
  return j;
}

PulseSpec pulse_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorKind::Config, "field 'pulse' must be an object");
  PulseSpec p;
  const auto kind = required<std::string>(j, "kind", "pulse.");
  if (kind == "gaussian") {
    p.kind = PulseKind::Gaussian;
  } else if (kind == "raised_cosine") {
    p.kind = PulseKind::RaisedCosine;
  } else if (kind == "hodgkin_huxley") {
    p.kind = PulseKind::HodgkinHuxley;
  } else {
    throw Error(ErrorKind::Config, fmt::format("field 'pulse.kind': unknown pulse '{}'", kind));
  }
  p.center = field(j, "center", "pulse.", p.center);
  p.width = field(j, "width", "pulse.", p.width);
  p.support = field(j, "support", "pulse.", p.support);
  if (j.contains("hh")) {
    const auto& h = j.at("hh");
    p.hh.stim_amplitude = field(h, "stim_amplitude", "pulse.hh.", p.hh.stim_amplitude);
    p.hh.stim_duration = field(h, "stim_duration", "pulse.hh.", p.hh.stim_duration);
    p.hh.duration = field(h, "duration", "pulse.hh.", p.hh.duration);
    p.hh.dt = field(h, "dt", "pulse.hh.", p.hh.dt);
    p.hh.taper_fraction = field(h, "taper_fraction", "pulse.hh.", p.hh.taper_fraction);
  }
  return p;
}

nlohmann::json shift_law_to_json(const ShiftLawSpec& s) {
  return {{"law", s.kind == ShiftLawKind::Uniform ? "uniform" : "discrete_grid"},
          {"a", s.a},
          {"b", s.b},
          {"theta0", s.theta0}};
}

ShiftLawSpec shift_law_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorKind::Config, "field 'shift_law' must be an object");
  ShiftLawSpec s;
  const auto law = field<std::string>(j, "law", "shift_law.", "uniform");
  if (law == "uniform") {
    s.kind = ShiftLawKind::Uniform;
  } else if (law == "discrete_grid") {
    s.kind = ShiftLawKind::DiscreteGrid;
  } else {
    throw Error(ErrorKind::Config, fmt::format("field 'shift_law.law': unknown law '{}'", law));
  }
  s.a = field(j, "a", "shift_law.", s.a);
  s.b = field(j, "b", "shift_law.", s.b);
  s.theta0 = field(j, "theta0", "shift_law.", s.theta0);
  return s;
}

ScenarioSpec scenario_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorKind::Config, "scenario config must be a JSON object");
  ScenarioSpec s;
  if (!j.contains("pulse")) throw Error(ErrorKind::Config, "missing required field 'pulse'");
  s.pulse = pulse_from_json(j.at("pulse"));
  s.M = required<std::size_t>(j, "M", "");
  s.n = field<std::size_t>(j, "n", "", s.n);
  s.on_grid = field(j, "on_grid", "", s.on_grid);
  if (j.contains("shift_law")) s.shift_law = shift_law_from_json(j.at("shift_law"));
  if (j.contains("noise")) {
    const auto& nz = j.at("noise");
    s.noise.sigma2 = field(nz, "sigma2", "noise.", s.noise.sigma2);
    s.noise.seed = field<std::uint64_t>(nz, "seed", "noise.", s.noise.seed);
  }
  if (s.noise.sigma2 < 0.0) throw Error(ErrorKind::Config, "field 'noise.sigma2' must be >= 0");
  if (s.n < CurveSet::min_samples) throw Error(ErrorKind::Config, "field 'n' must be >= 4");
  if (j.contains("perturbations")) {
    const auto& list = j.at("perturbations");
    if (!list.is_array()) throw Error(ErrorKind::Config, "field 'perturbations' must be an array");
    for (std::size_t i = 0; i < list.size(); ++i) {
      const auto& p = list[i];
      const std::string where = fmt::format("perturbations[{}].", i);
      const auto type = required<std::string>(p, "type", where);
      const std::uint64_t seed = field<std::uint64_t>(p, "seed", where, derive_seed(s.noise.seed, {100 + i}));
      if (type == "baseline_wander") {
        WanderSpec w;
        w.amplitude = field(p, "amplitude", where, w.amplitude);
        w.frequency = field(p, "frequency", where, w.frequency);
        w.phase = field(p, "phase", where, w.phase);
        w.random_phase = field(p, "random_phase", where, w.random_phase);
        const auto span = field<std::string>(p, "span", where, "curve");
        if (span == "curve") {
          w.span = WanderSpan::Curve;
        } else if (span == "record") {
          w.span = WanderSpan::Record;
        } else {
          throw Error(ErrorKind::Config, fmt::format("field '{}span': expected 'curve' or 'record'", where));
        }
        w.seed = seed;
        s.perturbations.emplace_back(w);
      } else if (type == "powerline") {
        PowerlineSpec pl;
        pl.a0 = field(p, "a0", where, pl.a0);
        pl.f0 = field(p, "f0", where, pl.f0);
        pl.fs = field(p, "fs", where, pl.fs);
        pl.amp_jitter_sd = field(p, "amp_jitter_sd", where, pl.amp_jitter_sd);
        pl.freq_jitter_sd = field(p, "freq_jitter_sd", where, pl.freq_jitter_sd);
        pl.seed = seed;
        s.perturbations.emplace_back(pl);
      } else {
        throw Error(ErrorKind::Config, fmt::format("field '{}type': unknown perturbation '{}'", where, type));
      }
    }
  }
  return s;
}

nlohmann::json scenario_to_json(const ScenarioSpec& s) {
  nlohmann::json j;
  j["pulse"] = pulse_to_json(s.pulse);
  j["shift_law"] = shift_law_to_json(s.shift_law);
  j["noise"] = {{"sigma2", s.noise.sigma2}, {"seed", s.noise.seed}};
  j["M"] = s.M;
  j["n"] = s.n;
  j["on_grid"] = s.on_grid;
  auto list = nlohmann::json::array();
  for (const auto& p : s.perturbations) {
    std::visit(
        [&](const auto& spec) {
          using T = std::decay_t<decltype(spec)>;
          if constexpr (std::is_same_v<T, WanderSpec>) {
            list.push_back({{"type", "baseline_wander"},
                            {"amplitude", spec.amplitude},
                            {"frequency", spec.frequency},
                            {"phase", spec.phase},
                            {"random_phase", spec.random_phase},
                            {"span", spec.span == WanderSpan::Curve ? "curve" : "record"},
                            {"seed", spec.seed}});
          } else {
            list.push_back({{"type", "powerline"},
                            {"a0", spec.a0},
                            {"f0", spec.f0},
                            {"fs", spec.fs},
                            {"amp_jitter_sd", spec.amp_jitter_sd},
                            {"freq_jitter_sd", spec.freq_jitter_sd},
                            {"seed", spec.seed}});
          }
        },
        p);
  }
  j["perturbations"] = list;
  return j;
}

Dataset run_scenario(const ScenarioSpec& s) {
  Dataset ds = gen_dataset(s.pulse, s.shift_law, s.noise, s.M, s.n, s.on_grid);
  for (const auto& p : s.perturbations) ds.curves = apply_perturbation(ds.curves, p);
  return ds;
}

}  // namespace curvealign
