#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "curvealign/baseline.hpp"
#include "curvealign/error.hpp"
#include "curvealign/simgen.hpp"

using namespace curvealign;

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<double> pulse(std::size_t n) {
  std::vector<double> s(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double a = std::remainder(sample_time(i, n) - 1.0, 2 * kPi);
    const double b = std::remainder(sample_time(i, n) - 1.5, 2 * kPi);
    s[i] = std::exp(-a * a / 0.02) + 0.4 * std::exp(-b * b / 0.1);
  }
  return s;
}

CurveSet rolled(std::size_t n, const std::vector<long>& bins) {
  const auto s = pulse(n);
  std::vector<std::vector<double>> rows;
  for (long d : bins) rows.push_back(circular_roll(s, d));
  return CurveSet::from_rows(rows);
}

double grid_distance(double a, double b) {
  const double d = std::fmod(std::abs(a - b), 2 * kPi);
  return std::min(d, 2 * kPi - d);
}

}  // namespace

TEST_CASE("lse: identical curves converge at once") {
  const CurveSet set = rolled(64, {3, 3, 3, 3});
  const LseResult r = lse_align(set);
  for (double t : r.alignment.theta_hat) CHECK(t == 0.0);
  CHECK(r.rounds <= 1);
}

TEST_CASE("lse: exact recovery of on-grid shifts") {
  const std::size_t n = 128;
  const std::vector<long> bins{10, 14, 30, 2, 60, 11};
  const CurveSet set = rolled(n, bins);
  const LseResult r = lse_align(set);
  for (std::size_t l = 0; l < bins.size(); ++l) {
    const double truth = static_cast<double>(bins[l] - bins[0]) * bin_width(n);
    CHECK(grid_distance(r.alignment.theta_hat[l], truth) <= bin_width(n));
  }
  CHECK(r.alignment.theta_hat[0] == 0.0);
}

TEST_CASE("lse: objective never increases") {
  const std::size_t n = 128;
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<long> u(0, 40);
  std::normal_distribution<double> g(0.0, 0.5);
  const auto s = pulse(n);
  std::vector<std::vector<double>> rows;
  for (int l = 0; l < 30; ++l) {
    auto y = circular_roll(s, u(rng));
    for (double& v : y) v += g(rng);
    rows.push_back(std::move(y));
  }
  const LseResult r = lse_align(CurveSet::from_rows(rows));
  REQUIRE(r.objective_history.size() >= 2);
  for (std::size_t i = 1; i < r.objective_history.size(); ++i)
    CHECK(r.objective_history[i] <= r.objective_history[i - 1] * (1 + 1e-12));
  for (double t : r.alignment.theta_hat) {
    CHECK(t >= 0.0);
    CHECK(t < 2 * kPi);
  }
}

TEST_CASE("landmark alignment") {
  const std::size_t n = 64;
  SUBCASE("shifted copy") {
    const auto r = landmark_align(rolled(n, {0, 7, 0}));
    CHECK(r.theta_hat[0] == 0.0);
    CHECK(r.theta_hat[1] == doctest::Approx(7 * bin_width(n)));
    CHECK(r.theta_hat[2] == 0.0);
  }
  SUBCASE("wraps negative differences") {
    const auto r = landmark_align(rolled(n, {5, 2}));
    CHECK(r.theta_hat[1] == doctest::Approx(2 * kPi - 3 * bin_width(n)));
  }
  SUBCASE("ties go to the first index") {
    std::vector<double> ref(n, 0.0), two(n, 0.0);
    ref[10] = 1.0;
    two[20] = 2.0;
    two[40] = 2.0;
    const auto r = landmark_align(CurveSet::from_rows({ref, two}));
    CHECK(r.theta_hat[1] == doctest::Approx(10 * bin_width(n)));
  }
  SUBCASE("constant curve") {
    try {
      landmark_align(CurveSet::from_rows({pulse(n), std::vector<double>(n, 0.3)}));
      FAIL("no error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::DegenerateLandmark);
    }
  }
}
