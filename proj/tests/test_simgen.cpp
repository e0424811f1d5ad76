#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "curvealign/density.hpp"
#include "curvealign/error.hpp"
#include "curvealign/simgen.hpp"
#include "curvealign/spectral.hpp"

using namespace curvealign;

namespace {

constexpr double kPi = std::numbers::pi;

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error");
  return ErrorKind::Input;
}

PulseSpec small_gaussian() {
  PulseSpec p;
  p.center = kPi / 4;
  p.width = kPi / 32;
  return p;
}

}  // namespace

TEST_CASE("gaussian pulse") {
  PulseSpec p;
  p.center = kPi / 2;
  p.width = kPi / 16;
  const std::size_t n = 512;
  const auto s = gen_pulse(p, n);
  REQUIRE(s.size() == n);
  const auto peak = static_cast<std::size_t>(std::max_element(s.begin(), s.end()) - s.begin());
  CHECK(peak == 128);
  CHECK(s[128] == doctest::Approx(1.0).epsilon(1e-15));
  for (std::size_t i = 0; i < n; ++i) {
    const double t = sample_time(i, n);
    if (std::abs(t - p.center) > 6 * p.width) CHECK(s[i] < 1e-6);
  }
  CHECK(p.support_begin() == doctest::Approx(kPi / 2 - 6 * kPi / 16));
  CHECK(p.support_end() == doctest::Approx(kPi / 2 + 6 * kPi / 16));
}

TEST_CASE("raised cosine pulse") {
  PulseSpec p;
  p.kind = PulseKind::RaisedCosine;
  p.center = kPi / 2;
  p.width = kPi / 8;
  const std::size_t n = 512;
  const auto s = gen_pulse(p, n);
  CHECK(s[128] == doctest::Approx(1.0).epsilon(1e-15));
  for (std::size_t i = 0; i < n; ++i) {
    const double t = sample_time(i, n);
    if (std::abs(t - p.center) >= p.width) CHECK(s[i] == 0.0);
    else CHECK(s[i] == doctest::Approx(0.5 * (1 + std::cos(kPi * (t - p.center) / p.width))));
  }
}

TEST_CASE("pulse length must be at least four") {
  CHECK(kind_of([] { gen_pulse(PulseSpec{}, 3); }) == ErrorKind::Input);
}

TEST_CASE("hodgkin-huxley pulse") {
  const PulseSpec p = PulseSpec::hodgkin_huxley();
  const MembraneTrace trace = simulate_hodgkin_huxley(p.hh);
  CHECK(count_spikes(trace) == 1);
  CHECK(trace.voltage.front() == doctest::Approx(-65.0));
  const double vmax = *std::max_element(trace.voltage.begin(), trace.voltage.end());
  CHECK(vmax > 20.0);
  CHECK(vmax < 60.0);

  const auto s = gen_pulse(p, 512);
  CHECK(*std::max_element(s.begin(), s.end()) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(s.front() == doctest::Approx(0.0).epsilon(1e-9));
  for (std::size_t i = 0; i < s.size(); ++i)
    if (sample_time(i, 512) > p.support) CHECK(s[i] == 0.0);
  CHECK(p.support_begin() == 0.0);
  CHECK(p.support_end() == doctest::Approx(0.7 * kPi));
}

TEST_CASE("subthreshold stimulus yields no spike") {
  PulseSpec p = PulseSpec::hodgkin_huxley();
  p.hh.stim_amplitude = 1.0;
  CHECK(count_spikes(simulate_hodgkin_huxley(p.hh)) == 0);
  CHECK(kind_of([&] { gen_pulse(p, 256); }) == ErrorKind::NoSpike);
}

TEST_CASE("circular roll") {
  const std::vector<double> x{1, 2, 3, 4, 5};
  CHECK(circular_roll(x, 2) == std::vector<double>{4, 5, 1, 2, 3});
  CHECK(circular_roll(x, -1) == std::vector<double>{2, 3, 4, 5, 1});
  CHECK(circular_roll(x, 10) == x);
}

TEST_CASE("on-grid dataset is made of exact rolls") {
  const std::size_t n = 128;
  const auto s = gen_pulse(small_gaussian(), n);
  ShiftLawSpec law;
  const Dataset d = gen_dataset(small_gaussian(), law, NoiseSpec{0.0, 42}, 20, n, true);
  REQUIRE(d.curves.size() == 21);
  CHECK(d.theta[0] == law.theta0);
  CHECK(d.theta_relative[0] == 0.0);
  for (std::size_t l = 0; l < 21; ++l) {
    const double bins = d.theta[l] / bin_width(n);
    CHECK(bins == doctest::Approx(std::round(bins)).epsilon(1e-12));
    const auto expected = circular_roll(s, std::lround(bins));
    const auto got = d.curves.samples(l);
    CHECK(std::equal(got.begin(), got.end(), expected.begin()));
    if (l > 0) {
      CHECK(d.theta[l] >= law.a - bin_width(n));
      CHECK(d.theta[l] <= law.b + bin_width(n));
    }
  }

  const SpectralSet spec = dft_coeffs(d.curves, FrequencyGrid(FrequencyGrid::max_k_for(n)));
  double top = 0.0;
  for (int k = 0; k <= spec.grid().k_max(); ++k) top = std::max(top, esd(spec.coeff(0, k)));
  for (std::size_t l = 1; l < 21; ++l)
    for (int k = -spec.grid().k_max(); k <= spec.grid().k_max(); ++k)
      CHECK(std::abs(esd(spec.coeff(l, k)) - esd(spec.coeff(0, k))) <= 1e-12 * top);
}

TEST_CASE("reference-only dataset") {
  const std::size_t n = 64;
  const Dataset d = gen_dataset(small_gaussian(), ShiftLawSpec{}, NoiseSpec{0.0, 1}, 0, n, true);
  REQUIRE(d.curves.size() == 1);
  const auto expected = circular_roll(gen_pulse(small_gaussian(), n), std::lround(kPi / bin_width(n)));
  const auto got = d.curves.samples(0);
  CHECK(std::equal(got.begin(), got.end(), expected.begin()));
}

TEST_CASE("off-grid shifts are exact phase rotations") {
  const std::size_t n = 128;
  const Dataset d = gen_dataset(small_gaussian(), ShiftLawSpec{}, NoiseSpec{0.0, 3}, 5, n, false);
  const int kmax = FrequencyGrid::max_k_for(n);
  const SpectralSet spec = dft_coeffs(d.curves, FrequencyGrid(kmax));
  for (std::size_t l = 1; l <= 5; ++l)
    for (int k = 1; k <= 20; ++k) {
      const cplx rotated = spec.coeff(l, k) * std::polar(1.0, k * d.theta_relative[l]);
      CHECK(std::abs(rotated - spec.coeff(0, k)) < 1e-12);
    }
}

TEST_CASE("noise variance") {
  const std::size_t n = 128, M = 500;
  const auto clean = gen_dataset(small_gaussian(), ShiftLawSpec{}, NoiseSpec{0.0, 8}, M, n, true);
  const auto noisy = gen_dataset(small_gaussian(), ShiftLawSpec{}, NoiseSpec{0.1, 8}, M, n, true);
  CHECK(clean.theta == noisy.theta);
  double ss = 0.0, sum = 0.0;
  std::size_t count = 0;
  for (std::size_t l = 0; l <= M; ++l)
    for (std::size_t i = 0; i < n; ++i) {
      const double r = noisy.curves.samples(l)[i] - clean.curves.samples(l)[i];
      ss += r * r;
      sum += r;
      ++count;
    }
  const double mean = sum / static_cast<double>(count);
  const double var = ss / static_cast<double>(count - 1) - mean * mean;
  CHECK(var == doctest::Approx(0.1).epsilon(0.05));
}

TEST_CASE("growing M keeps earlier curves") {
  const auto a = gen_dataset(small_gaussian(), ShiftLawSpec{}, NoiseSpec{0.01, 5}, 10, 64, false);
  const auto b = gen_dataset(small_gaussian(), ShiftLawSpec{}, NoiseSpec{0.01, 5}, 30, 64, false);
  for (std::size_t l = 0; l <= 10; ++l) {
    CHECK(a.theta[l] == b.theta[l]);
    const auto x = a.curves.samples(l), y = b.curves.samples(l);
    CHECK(std::equal(x.begin(), x.end(), y.begin()));
  }
}

TEST_CASE("shift draws follow the uniform law") {
  const std::size_t M = 10000;
  const ShiftLawSpec law;
  const auto d = gen_dataset(small_gaussian(), law, NoiseSpec{0.0, 99}, M, 32, false);
  const std::vector<double> draws(d.theta.begin() + 1, d.theta.end());
  const UniformLaw u{law.a, law.b};
  CHECK(ks_statistic(draws, [&](double t) { return u.cdf(t); }) < 1.63 / std::sqrt(static_cast<double>(M)));
}

TEST_CASE("discrete grid law lands on sample times") {
  ShiftLawSpec law;
  law.kind = ShiftLawKind::DiscreteGrid;
  const std::size_t n = 64;
  const auto d = gen_dataset(small_gaussian(), law, NoiseSpec{0.0, 4}, 200, n, false);
  for (std::size_t l = 1; l <= 200; ++l) {
    const double bins = d.theta[l] / bin_width(n);
    CHECK(std::abs(bins - std::round(bins)) < 1e-9);
    CHECK(d.theta[l] >= law.a);
    CHECK(d.theta[l] <= law.b);
  }
}

TEST_CASE("support violations are rejected") {
  ShiftLawSpec law;
  law.b = 6.0;
  CHECK(kind_of([&] { gen_dataset(small_gaussian(), law, NoiseSpec{}, 5, 64, false); }) == ErrorKind::Assumption);
  ShiftLawSpec backwards;
  backwards.a = 2.0;
  backwards.b = 1.0;
  CHECK(kind_of([&] { gen_dataset(small_gaussian(), backwards, NoiseSpec{}, 5, 64, false); }) == ErrorKind::Assumption);
}

TEST_CASE("baseline wander") {
  const std::size_t n = 64;
  const auto d = gen_dataset(small_gaussian(), ShiftLawSpec{}, NoiseSpec{0.0, 2}, 4, n, false);
  SUBCASE("zero amplitude is the identity") {
    WanderSpec w;
    w.frequency = 1.0;
    const CurveSet out = baseline_wander(d.curves, w);
    for (std::size_t l = 0; l < 5; ++l)
      CHECK(std::equal(out.samples(l).begin(), out.samples(l).end(), d.curves.samples(l).begin()));
  }
  SUBCASE("constant offset only touches k = 0") {
    WanderSpec w;
    w.amplitude = 1.0;
    w.phase = kPi / 2;
    const CurveSet out = baseline_wander(d.curves, w);
    for (std::size_t i = 0; i < n; ++i) CHECK(out.samples(2)[i] == doctest::Approx(d.curves.samples(2)[i] + 1.0));
    const SpectralSet a = dft_coeffs(d.curves, FrequencyGrid(20));
    const SpectralSet b = dft_coeffs(out, FrequencyGrid(20));
    CHECK(std::abs(b.coeff(1, 0) - a.coeff(1, 0) - cplx(1.0)) < 1e-12);
    for (int k = 1; k <= 20; ++k) CHECK(std::abs(b.coeff(1, k) - a.coeff(1, k)) < 1e-12);
  }
  SUBCASE("curve span") {
    WanderSpec w;
    w.amplitude = 0.5;
    w.frequency = 1.0;
    const CurveSet out = baseline_wander(d.curves, w);
    for (std::size_t i = 0; i < n; ++i)
      CHECK(out.samples(3)[i] - d.curves.samples(3)[i] == doctest::Approx(0.5 * std::sin(sample_time(i, n))));
  }
  SUBCASE("record span") {
    WanderSpec w;
    w.amplitude = 0.5;
    w.frequency = 1.0;
    w.span = WanderSpan::Record;
    const CurveSet out = baseline_wander(d.curves, w);
    for (std::size_t l = 0; l < 5; ++l)
      for (std::size_t i = 0; i < n; ++i) {
        const double t = 2 * kPi * static_cast<double>(l * n + i) / static_cast<double>(n * 5);
        CHECK(out.samples(l)[i] - d.curves.samples(l)[i] == doctest::Approx(0.5 * std::sin(t)));
      }
  }
  SUBCASE("random phases depend on the curve id only") {
    WanderSpec w;
    w.amplitude = 0.3;
    w.frequency = 2.0;
    w.random_phase = true;
    w.seed = 17;
    const CurveSet full = baseline_wander(d.curves, w);
    std::vector<SampledCurve> reversed(d.curves.curves().rbegin(), d.curves.curves().rend());
    const CurveSet rev = baseline_wander(CurveSet(reversed), w);
    for (std::size_t l = 0; l < 5; ++l) CHECK(rev.curves()[4 - l].samples == full.curves()[l].samples);
  }
}

TEST_CASE("powerline interference") {
  const std::size_t n = 64;
  const auto d = gen_dataset(small_gaussian(), ShiftLawSpec{}, NoiseSpec{0.0, 2}, 4, n, false);
  SUBCASE("deterministic sinusoid") {
    PowerlineSpec p;
    p.a0 = 1.0;
    p.f0 = 50.0;
    p.fs = 500.0;
    const CurveSet out = powerline(d.curves, p);
    const auto diff = [&](std::size_t i) { return out.samples(1)[i] - d.curves.samples(1)[i]; };
    CHECK(diff(0) == doctest::Approx(0.0));
    CHECK(diff(2) == doctest::Approx(0.95106).epsilon(1e-5));
    for (std::size_t i = 0; i < n; ++i) CHECK(diff(i) == doctest::Approx(std::sin(2 * kPi * static_cast<double>(i) / 10)));
  }
  SUBCASE("zero amplitude and jitter is the identity") {
    const CurveSet out = powerline(d.curves, PowerlineSpec{});
    for (std::size_t l = 0; l < 5; ++l) CHECK(out.curves()[l].samples == d.curves.curves()[l].samples);
  }
  SUBCASE("jitter is drawn per curve id") {
    PowerlineSpec p;
    p.a0 = 0.2;
    p.fs = static_cast<double>(n) / (2 * kPi);
    p.amp_jitter_sd = 0.01;
    p.freq_jitter_sd = 0.01;
    p.seed = 9;
    const CurveSet full = powerline(d.curves, p);
    const CurveSet part = powerline(CurveSet({d.curves.curves()[3], d.curves.curves()[1]}), p);
    CHECK(part.curves()[0].samples == full.curves()[3].samples);
    CHECK(part.curves()[1].samples == full.curves()[1].samples);
    CHECK(full.curves()[1].samples != full.curves()[2].samples);
  }
}

TEST_CASE("scenario json") {
  const nlohmann::json j = nlohmann::json::parse(R"({
    "pulse": {"kind": "gaussian", "center": 0.8, "width": 0.1},
    "M": 6, "n": 64,
    "noise": {"sigma2": 0.01, "seed": 3},
    "perturbations": [{"type": "powerline", "a0": 0.2, "f0": 50, "fs": 10}]
  })");
  const ScenarioSpec s = scenario_from_json(j);
  CHECK(s.M == 6);
  CHECK(s.n == 64);
  CHECK(s.pulse.center == 0.8);
  CHECK(s.noise.sigma2 == 0.01);
  REQUIRE(s.perturbations.size() == 1);
  CHECK(std::holds_alternative<PowerlineSpec>(s.perturbations[0]));
  CHECK(scenario_to_json(scenario_from_json(scenario_to_json(s))) == scenario_to_json(s));
  const Dataset a = run_scenario(s);
  const Dataset b = run_scenario(s);
  CHECK(a.curves.size() == 7);
  for (std::size_t l = 0; l < 7; ++l) CHECK(a.curves.curves()[l].samples == b.curves.curves()[l].samples);

  nlohmann::json missing = j;
  missing.erase("pulse");
  try {
    scenario_from_json(missing);
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Config);
    CHECK(std::string(e.what()).find("pulse") != std::string::npos);
  }
  nlohmann::json bad = j;
  bad["pulse"]["kind"] = "square";
  CHECK(kind_of([&] { scenario_from_json(bad); }) == ErrorKind::Config);
}
