#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "curvealign/align.hpp"
#include "curvealign/error.hpp"
#include "curvealign/fft.hpp"
#include "curvealign/simgen.hpp"

using namespace curvealign;

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<double> bump(std::size_t n, double center, double width) {
  std::vector<double> s(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double d = std::remainder(sample_time(i, n) - center, 2 * kPi);
    s[i] = std::exp(-0.5 * d * d / (width * width));
  }
  return s;
}

// Asymmetric two-bump pulse so the shift is identifiable.
std::vector<double> pulse(std::size_t n) {
  auto a = bump(n, 0.6, 0.15);
  const auto b = bump(n, 1.1, 0.25);
  for (std::size_t i = 0; i < n; ++i) a[i] += 0.5 * b[i];
  return a;
}

struct Instance {
  CurveSet set;
  std::vector<double> theta;
};

Instance make_instance(std::size_t n, const std::vector<long>& bins, double sigma, std::uint64_t seed) {
  const auto s = pulse(n);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, sigma);
  std::vector<SampledCurve> curves;
  Instance inst;
  for (std::size_t l = 0; l < bins.size(); ++l) {
    auto y = circular_roll(s, bins[l]);
    if (sigma > 0)
      for (double& v : y) v += g(rng);
    curves.push_back({static_cast<int>(l), std::move(y)});
    inst.theta.push_back(wrap_angle(static_cast<double>(bins[l] - bins[0]) * bin_width(n)));
  }
  inst.set = CurveSet(std::move(curves));
  return inst;
}

std::vector<std::size_t> all_of(const CurveSet& set) {
  std::vector<std::size_t> b(set.size());
  for (std::size_t i = 0; i < b.size(); ++i) b[i] = i;
  return b;
}

}  // namespace

TEST_CASE("lambda schedule") {
  CHECK(lambda_schedule(1, 0.9) == 1.0);
  CHECK(lambda_schedule(10, 0.9) == 7.0);
  CHECK(lambda_schedule(30, 0.9) == 21.0);
  CHECK(lambda_schedule(50, 0.75) == 18.0);
  AlignConfig c;
  c.lambda = 2.5;
  CHECK(c.lambda_for(10) == 2.5);
  c.beta = 1.0;
  CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("cross-correlation start finds grid shifts") {
  const auto inst = make_instance(128, {3, 10, 3, 100}, 0.0, 1);
  const ShiftVector init = init_shifts_xcorr(inst.set, all_of(inst.set));
  REQUIRE(init.size() == 4);
  CHECK(init[0] == 0.0);
  for (std::size_t l = 1; l < 4; ++l) CHECK(circular_distance(init[l], inst.theta[l]) < 1e-12);
}

TEST_CASE("cross-correlation ties resolve to zero") {
  const CurveSet flat = CurveSet::from_rows({std::vector<double>(32, 1.0), std::vector<double>(32, 1.0)});
  const std::vector<std::size_t> block{0, 1};
  CHECK(init_shifts_xcorr(flat, block)[1] == 0.0);
}

TEST_CASE("block minimizer reaches the grid minimum") {
  const std::size_t n = 64;
  const auto inst = make_instance(n, {5, 12, 40, 27}, 0.05, 3);
  const FrequencyGrid grid(FrequencyGrid::max_k_for(n));
  const SpectralSet spec = dft_coeffs(inst.set, grid);
  const auto w = FrequencyWeights::flat(grid.k_max());
  const AlignProblem problem{inst.set, spec, w};
  const auto block = all_of(inst.set);
  AlignConfig cfg;
  const double lambda = cfg.lambda_for(3);

  // Brute force over the n^3 grid of shift vectors.
  BlockObjective obj(spec, block, lambda, w);
  const double scale = cost_scale(spec, w);
  double best = std::numeric_limits<double>::infinity();
  std::vector<double> best_alpha(3);
  std::vector<double> a(3);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t m = 0; m < n; ++m) {
        a = {sample_time(i, n), sample_time(j, n), sample_time(m, n)};
        const double v = obj.value(a) / scale;
        if (v < best) {
          best = v;
          best_alpha = a;
        }
      }

  const BlockResult r = minimize_block(problem, block, 0, cfg);
  CHECK(r.objective <= best + 1e-12);
  CHECK(r.objective <= r.initial_objective);
  CHECK(r.raw_objective == doctest::Approx(r.objective * scale).epsilon(1e-9));
  for (std::size_t l = 0; l < 3; ++l) CHECK(circular_distance(r.shifts[l + 1], best_alpha[l]) <= bin_width(n));
  for (std::size_t l = 0; l < 3; ++l) CHECK(circular_distance(r.shifts[l + 1], inst.theta[l + 1]) <= bin_width(n));
}

TEST_CASE("identical curves need no correction") {
  const auto inst = make_instance(128, {7, 7, 7, 7, 7}, 0.0, 1);
  const FrequencyGrid grid(40);
  const SpectralSet spec = dft_coeffs(inst.set, grid);
  const auto w = FrequencyWeights::flat(40);
  const BlockResult r = minimize_block({inst.set, spec, w}, all_of(inst.set), 0, AlignConfig{});
  for (std::size_t l = 1; l < 5; ++l) CHECK(circular_distance(r.shifts[l], 0.0) < 1e-6);
  CHECK(r.objective < 1e-20);
}

TEST_CASE("off-grid shifts are recovered below one bin on clean data") {
  const std::size_t n = 128;
  const auto s = pulse(n);
  const std::vector<double> truth{0.0, 0.37, 1.91, 4.4};
  std::vector<std::vector<double>> rows;
  for (double t : truth) rows.push_back(fft::shift_signal(s, t));
  const CurveSet set = CurveSet::from_rows(rows);
  const auto w = FrequencyWeights::flat(50);
  const AlignmentResult r = align_curves(set, 3, w, AlignConfig{});
  for (std::size_t l = 1; l < 4; ++l) CHECK(circular_distance(r.theta_hat[l], truth[l]) < 0.02 * bin_width(n));
}

TEST_CASE("align_all covers every block and ignores the thread count") {
  std::vector<long> bins{0};
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<long> u(0, 60);
  for (int i = 0; i < 12; ++i) bins.push_back(u(rng));
  const auto inst = make_instance(128, bins, 0.1, 12);
  const FrequencyGrid grid(50);
  const SpectralSet spec = dft_coeffs(inst.set, grid);
  const auto w = FrequencyWeights::flat(50);
  const AlignProblem problem{inst.set, spec, w};

  SUBCASE("K = 1") {
    const auto r = align_all(problem, make_blocks(inst.set, 1), AlignConfig{});
    CHECK(r.theta_hat.size() == 13);
    CHECK(r.block_objective.size() == 12);
    CHECK(r.theta_hat[0] == 0.0);
    CHECK(r.block_of[5] == 4);
  }
  SUBCASE("threads") {
    const auto plan = make_blocks(inst.set, 3);
    const auto a = align_all(problem, plan, AlignConfig{}, 1);
    const auto b = align_all(problem, plan, AlignConfig{}, 4);
    CHECK(a.theta_hat == b.theta_hat);
    CHECK(a.block_objective == b.block_objective);
    for (std::size_t l = 1; l < 13; ++l) CHECK(circular_distance(a.theta_hat[l], inst.theta[l]) < 2 * bin_width(128));
  }
}

TEST_CASE("block size criterion and selection") {
  const auto inst = make_instance(64, {0, 3, 9, 20, 31, 2, 5}, 0.3, 5);
  const FrequencyGrid grid(20);
  const SpectralSet spec = dft_coeffs(inst.set, grid);
  const auto w = FrequencyWeights::flat(20);

  for (std::size_t L : {1u, 2u, 3u, 6u}) {
    double ref = 0.0;
    for (int k = -20; k <= 20; ++k) {
      double part = 0.0;
      for (std::size_t l = 0; l <= L; ++l) part += std::norm(spec.coeff(l, k));
      const double d = spec.mean_esd(k) - part / static_cast<double>(L + 1);
      ref += d * d;
    }
    CHECK(block_size_criterion(spec, w, L) == doctest::Approx(ref).epsilon(1e-12));
  }
  CHECK(block_size_criterion(spec, w, 6) < 1e-20);

  CHECK_THROWS_AS(select_block_size(spec, w, 1.0, {}), Error);
  const auto loose = select_block_size(spec, w, 1e9, {1, 2, 3, 6});
  CHECK(loose.K == 1);
  CHECK_FALSE(loose.threshold_unmet);
  CHECK_THROWS_AS(select_block_size(spec, w, -1.0, {1, 2, 3, 6}), Error);
  const auto tight = select_block_size(spec, w, 0.0, {1, 2, 3});
  CHECK(tight.K == 3);
  CHECK(tight.threshold_unmet);
  const double c2 = block_size_criterion(spec, w, 2);
  const double c1 = block_size_criterion(spec, w, 1);
  if (c2 < c1) CHECK(select_block_size(spec, w, c2, {1, 2, 3, 6}).K == 2);
}

TEST_CASE("circular distances and error summaries") {
  CHECK(circular_distance(0.1, 2 * kPi - 0.1) == doctest::Approx(0.2));
  CHECK(circular_distance(-0.1, 0.1) == doctest::Approx(0.2));
  CHECK(circular_distance(0.0, kPi) == doctest::Approx(kPi));
  CHECK(circular_distance(1.0, 1.0 + 4 * kPi) == doctest::Approx(0.0).epsilon(1e-12));

  const std::vector<double> hat{0.1, 3.0, 6.2};
  const std::vector<double> truth{0.0, 3.0, 0.0};
  const double tail = 2 * kPi - 6.2;
  const ErrorSummary e = circular_error(hat, truth, 0.05);
  REQUIRE(e.distance.size() == 3);
  CHECK(e.distance[0] == doctest::Approx(0.1));
  CHECK(e.distance[1] == doctest::Approx(0.0));
  CHECK(e.distance[2] == doctest::Approx(tail));
  CHECK(e.rms == doctest::Approx(std::sqrt((0.01 + tail * tail) / 3)));
  CHECK(e.max == doctest::Approx(0.1));
  CHECK(e.fraction_beyond == doctest::Approx(2.0 / 3));
  CHECK_THROWS_AS(circular_error(hat, std::vector<double>{0.0}, 0.1), Error);

  std::vector<double> flipped;
  for (double t : truth) flipped.push_back(wrap_angle(t + kPi));
  CHECK(circular_error(flipped, truth, 0.1).rms == doctest::Approx(kPi));
  CHECK(circular_error(truth, truth, 0.1).max == 0.0);
}

TEST_CASE("block offsets report a per-block common shift") {
  const CurveSet set = CurveSet::from_rows(std::vector<std::vector<double>>(7, std::vector<double>(16, 1.0)));
  const BlockPlan plan = make_blocks(set, 3);
  const std::vector<double> truth{0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0};
  std::vector<double> hat = truth;
  for (std::size_t l = 1; l <= 3; ++l) hat[l] += 0.3;
  for (std::size_t l = 4; l <= 6; ++l) hat[l] = wrap_angle(hat[l] - 0.2);
  const auto off = block_offsets(hat, truth, plan);
  REQUIRE(off.size() == 2);
  CHECK(off[0].offset == doctest::Approx(0.3));
  CHECK(off[1].offset == doctest::Approx(-0.2));
  CHECK(off[0].dispersion == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(off[1].dispersion == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("aligned mean with exact shifts reproduces the reference") {
  const auto inst = make_instance(64, {4, 9, 30, 50}, 0.0, 1);
  const auto m = aligned_mean(inst.set, inst.theta);
  REQUIRE(m.size() == 64);
  for (std::size_t i = 0; i < 64; ++i) CHECK(std::abs(m[i] - inst.set.samples(0)[i]) < 1e-12);
}

TEST_CASE("few curves are misaligned by more than five bins") {
  const std::size_t n = 512, K = 50;
  std::size_t beyond = 0, total = 0;
  for (std::uint64_t seed : {100u, 101u}) {
    const Dataset ds = gen_dataset(PulseSpec::hodgkin_huxley(), ShiftLawSpec{}, NoiseSpec{0.01, seed}, 4 * K, n, false);
    const auto r = align_curves(ds.curves, K, FrequencyWeights::flat(75), AlignConfig{});
    const auto e = circular_error(r.theta_hat, ds.theta_relative, 5 * bin_width(n));
    beyond += static_cast<std::size_t>(std::lround(e.fraction_beyond * static_cast<double>(e.distance.size())));
    total += e.distance.size();
  }
  CHECK(static_cast<double>(beyond) <= 0.05 * static_cast<double>(total));
}
