#pragma once

#include <cstddef>
#include <cstdint>
#include <json.hpp>
#include <numbers>
#include <span>
#include <variant>
#include <vector>

#include "curvealign/curves.hpp"

namespace curvealign {

/// Classical squid-axon constants (mV, ms, mS/cm^2, uA/cm^2), rest at -65 mV.
struct HodgkinHuxleyParams {
  double c_m = 1.0;
  double g_na = 120.0;
  double g_k = 36.0;
  double g_l = 0.3;
  double e_na = 50.0;
  double e_k = -77.0;
  double e_l = -54.387;
  double v_rest = -65.0;
  /// Current pulse applied from t = 0.
  double stim_amplitude = 10.0;
  double stim_duration = 1.0;
  /// Simulated span; the whole span is mapped onto the pulse support.
  double duration = 8.0;
  double dt = 0.01;
  /// Fraction of the span over which the trace is cosine-tapered to zero.
  double taper_fraction = 0.1;
};

struct MembraneTrace {
  std::vector<double> time;
  std::vector<double> voltage;
};

/// Fixed-step RK4 integration of the four-state membrane equations.
MembraneTrace simulate_hodgkin_huxley(const HodgkinHuxleyParams& params);

/// Upward crossings of `threshold_mv`.
int count_spikes(const MembraneTrace& trace, double threshold_mv = 0.0);

enum class PulseKind { Gaussian, RaisedCosine, HodgkinHuxley };

struct PulseSpec {
  PulseKind kind = PulseKind::Gaussian;
  /// Gaussian: mean and standard deviation. Raised cosine: centre and half-width.
  double center = std::numbers::pi / 4.0;
  double width = std::numbers::pi / 32.0;
  /// Hodgkin-Huxley: the spike is compressed into [0, support].
  double support = 0.7 * std::numbers::pi;
  HodgkinHuxleyParams hh;

  /// Start and end of the (numerical) support on [0, 2pi).
  double support_begin() const;
  double support_end() const;

  static PulseSpec hodgkin_huxley() {
    PulseSpec p;
    p.kind = PulseKind::HodgkinHuxley;
    return p;
  }
};

/// Samples of the pulse at t_i = 2 pi i / n. Hodgkin-Huxley pulses are scaled so
/// the largest sample is exactly 1 above rest. Throws Error(NoSpike) when the
/// stimulus does not produce exactly one action potential.
std::vector<double> gen_pulse(const PulseSpec& spec, std::size_t n);

enum class ShiftLawKind { Uniform, DiscreteGrid };

struct ShiftLawSpec {
  ShiftLawKind kind = ShiftLawKind::Uniform;
  double a = 120.0 * std::numbers::pi / 256.0;
  double b = 325.0 * std::numbers::pi / 256.0;
  double theta0 = std::numbers::pi;
};

struct NoiseSpec {
  double sigma2 = 0.0;
  /// Master seed for shifts and noise.
  std::uint64_t seed = 1;
};

struct Dataset {
  CurveSet curves;
  /// Absolute shifts; theta[0] is the reference shift.
  std::vector<double> theta;
  /// Shifts relative to the reference, wrapped to [0, 2pi).
  std::vector<double> theta_relative;
  std::vector<double> pulse;
};

/// y_l(t_i) = s(t_i - theta_l) + sigma eps_l(t_i). Curve 0 takes theta0. Off-grid
/// shifts are applied as exact phase rotations; with on_grid the shifts are
/// rounded to the sample grid and applied by circular roll.
/// Throws Error(Assumption) when the pulse and shift supports overlap the wrap.
Dataset gen_dataset(const PulseSpec& pulse, const ShiftLawSpec& law, const NoiseSpec& noise, std::size_t M,
                    std::size_t n, bool on_grid);

/// Same, from pre-computed pulse samples spanning [0, support_end].
Dataset gen_dataset(std::vector<double> pulse, double support_end, const ShiftLawSpec& law, const NoiseSpec& noise,
                    std::size_t M, bool on_grid);

/// y[i] = x[(i - d) mod n].
std::vector<double> circular_roll(std::span<const double> x, long d);

enum class WanderSpan { Curve, Record };

struct WanderSpec {
  double amplitude = 0.0;
  /// Cycles per curve (Curve) or per whole recording (Record).
  double frequency = 0.0;
  double phase = 0.0;
  /// Adds an independent uniform phase per curve.
  bool random_phase = false;
  std::uint64_t seed = 1;
  /// Record: the curves are laid end to end in id order and the sine runs
  /// continuously over the concatenation, t = 2pi (l n + i) / (n (M+1)).
  WanderSpan span = WanderSpan::Curve;
};

/// Adds amplitude * sin(frequency * t + phase_l) to every curve, with t the
/// curve time t_i or the recording time depending on the span.
CurveSet baseline_wander(const CurveSet& set, const WanderSpec& spec);

struct PowerlineSpec {
  double a0 = 0.0;
  double f0 = 50.0;
  double fs = 500.0;
  double amp_jitter_sd = 0.0;
  double freq_jitter_sd = 0.0;
  std::uint64_t seed = 1;
};

/// Adds (A0 + xi_A[i]) sin(2 pi (f0 + xi_f[i]) i / fs) to every curve, with
/// i the within-curve sample index and xi drawn per curve id.
CurveSet powerline(const CurveSet& set, const PowerlineSpec& spec);

using Perturbation = std::variant<WanderSpec, PowerlineSpec>;

CurveSet apply_perturbation(const CurveSet& set, const Perturbation& p);

/// Simulation scenario as read from a JSON config.
struct ScenarioSpec {
  PulseSpec pulse;
  ShiftLawSpec shift_law;
  NoiseSpec noise;
  std::size_t M = 0;
  std::size_t n = 512;
  bool on_grid = false;
  std::vector<Perturbation> perturbations;
};

/// Throws Error(Config) naming the missing or invalid field.
ScenarioSpec scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const ScenarioSpec& s);

Dataset run_scenario(const ScenarioSpec& s);

nlohmann::json pulse_to_json(const PulseSpec& p);
PulseSpec pulse_from_json(const nlohmann::json& j);
nlohmann::json shift_law_to_json(const ShiftLawSpec& s);
ShiftLawSpec shift_law_from_json(const nlohmann::json& j);

}  // namespace curvealign
