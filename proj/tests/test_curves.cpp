#include <doctest.h>

#include <cmath>
#include <random>

#include "curvealign/csv.hpp"
#include "curvealign/curves.hpp"
#include "curvealign/error.hpp"

using namespace curvealign;

namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an Error");
  return ErrorKind::Input;
}

}  // namespace

TEST_CASE("parse_curves reads a 2x4 table") {
  const CurveSet set = parse_curves("1,2,3,4\n5,6,7,8\n");
  CHECK(set.size() == 2);
  CHECK(set.M() == 1);
  CHECK(set.n() == 4);
  CHECK(set[1].id == 1);
  CHECK(set.samples(1)[2] == 7.0);
}

TEST_CASE("parse_curves skips comments and blank lines") {
  const CurveSet set = parse_curves("# header\n1,2,3,4\n\n# more\n5,6,7,8\n");
  CHECK(set.size() == 2);
}

TEST_CASE("ragged rows are a format error naming the row") {
  try {
    parse_curves("1,2,3,4\n5,6,7\n");
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Format);
    CHECK(std::string(e.what()).find("row 2 (line 2)") != std::string::npos);
  }
}

TEST_CASE("non-numeric cell is a parse error with row and column") {
  try {
    parse_curves("1,2,3,4\n5,x,7,8\n");
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Parse);
    const std::string msg = e.what();
    CHECK(msg.find("row 2 (line 2)") != std::string::npos);
    CHECK(msg.find("column 2") != std::string::npos);
  }
}

TEST_CASE("empty input is insufficient data") {
  CHECK(kind_of([] { parse_curves(""); }) == ErrorKind::InsufficientData);
  CHECK(kind_of([] { parse_curves("1,2,3,4\n"); }) == ErrorKind::InsufficientData);
}

TEST_CASE("curves need at least four finite samples") {
  CHECK(kind_of([] { parse_curves("1,2,3\n4,5,6\n"); }) == ErrorKind::Format);
  CHECK(kind_of([] { CurveSet::from_rows({{1, 2, 3, NAN}, {1, 2, 3, 4}}); }) == ErrorKind::Format);
}

TEST_CASE("wide csv round trip is bit exact") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 1e3);
  std::vector<std::vector<double>> rows(5, std::vector<double>(37));
  for (auto& r : rows)
    for (double& v : r) v = g(rng) * std::pow(10.0, static_cast<int>(rng() % 20) - 10);
  rows[2][3] = 5e-324;
  rows[3][4] = -0.0;
  const CurveSet a = CurveSet::from_rows(rows);
  const CurveSet b = parse_curves(format_curves(a));
  REQUIRE(b.size() == a.size());
  for (std::size_t l = 0; l < a.size(); ++l)
    for (std::size_t i = 0; i < a.n(); ++i) CHECK(std::signbit(a.samples(l)[i]) == std::signbit(b.samples(l)[i]));
  for (std::size_t l = 0; l < a.size(); ++l)
    CHECK(std::equal(a.samples(l).begin(), a.samples(l).end(), b.samples(l).begin()));
}

TEST_CASE("missing file is an io error") {
  CHECK(kind_of([] { load_curves("/nonexistent/curves.csv"); }) == ErrorKind::Io);
}

TEST_CASE("make_blocks follows the block layout") {
  auto set_of = [](std::size_t M) { return CurveSet::from_rows(std::vector<std::vector<double>>(M + 1, {0, 1, 2, 3})); };

  SUBCASE("M=6, K=3") {
    const BlockPlan plan = make_blocks(set_of(6), 3);
    REQUIRE(plan.N() == 2);
    CHECK(plan.blocks[0] == std::vector<std::size_t>{0, 1, 2, 3});
    CHECK(plan.blocks[1] == std::vector<std::size_t>{0, 4, 5, 6});
  }
  SUBCASE("M=2, K=1") {
    const BlockPlan plan = make_blocks(set_of(2), 1);
    REQUIRE(plan.N() == 2);
    CHECK(plan.blocks[0] == std::vector<std::size_t>{0, 1});
    CHECK(plan.blocks[1] == std::vector<std::size_t>{0, 2});
  }
  SUBCASE("M=5, K=3 is a partition error naming M and K") {
    try {
      make_blocks(set_of(5), 3);
      FAIL("no error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Partition);
      const std::string msg = e.what();
      CHECK(msg.find("M = 5") != std::string::npos);
      CHECK(msg.find("K = 3") != std::string::npos);
    }
  }
}

TEST_CASE("make_blocks invariants over random partitions") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t K = 1 + rng() % 7;
    const std::size_t N = 1 + rng() % 6;
    const CurveSet set = CurveSet::from_rows(std::vector<std::vector<double>>(N * K + 1, {0, 1, 2, 3}));
    const BlockPlan plan = make_blocks(set, K);
    REQUIRE(plan.N() == N);
    std::vector<int> seen(N * K + 1, 0);
    for (std::size_t m = 0; m < N; ++m) {
      const auto& b = plan.blocks[m];
      REQUIRE(b.size() == K + 1);
      CHECK(b[0] == 0);
      for (std::size_t j = 1; j <= K; ++j) {
        CHECK(b[j] == m * K + j);
        ++seen[b[j]];
      }
    }
    for (std::size_t i = 1; i < seen.size(); ++i) CHECK(seen[i] == 1);
  }
}

TEST_CASE("segment_maxima cuts windows around peaks") {
  auto gauss = [](std::vector<double>& s, double c, double a) {
    for (std::size_t i = 0; i < s.size(); ++i) s[i] += a * std::exp(-0.5 * std::pow((static_cast<double>(i) - c) / 5.0, 2));
  };

  SUBCASE("two unit peaks") {
    std::vector<double> s(400, 0.0);
    gauss(s, 100, 1.0);
    gauss(s, 300, 1.0);
    const CurveSet set = segment_maxima(s, 100, 50, 0.5);
    REQUIRE(set.size() == 2);
    for (std::size_t l = 0; l < 2; ++l) {
      CHECK(set.n() == 100);
      const auto y = set.samples(l);
      CHECK(std::max_element(y.begin(), y.end()) - y.begin() == 50);
    }
  }
  SUBCASE("flat signal") {
    const std::vector<double> s(400, 0.0);
    CHECK(kind_of([&] { segment_maxima(s, 100, 50, 0.5); }) == ErrorKind::EmptySegmentation);
  }
  SUBCASE("close peaks keep the larger one") {
    std::vector<double> s(400, 0.0);
    s[200] = 1.0;
    s[210] = 2.0;
    const CurveSet set = segment_maxima(s, 100, 50, 0.5);
    REQUIRE(set.size() == 1);
    CHECK(set.samples(0)[50] == 2.0);
  }
  SUBCASE("peaks whose window leaves the signal are dropped") {
    std::vector<double> s(400, 0.0);
    s[10] = 3.0;
    s[200] = 1.0;
    const CurveSet set = segment_maxima(s, 100, 50, 0.5);
    REQUIRE(set.size() == 1);
    CHECK(set.samples(0)[50] == 1.0);
  }
}

TEST_CASE("segment windows all have window_len samples") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> s(2000);
  for (double& v : s) v = u(rng);
  const CurveSet set = segment_maxima(s, 64, 40, 0.9);
  CHECK(set.size() > 1);
  CHECK(set.n() == 64);
}

TEST_CASE("csv tables convert cells on access") {
  const csv::Table t = csv::parse_table("a,b,name\n1,2.5,x\n3,-4,y\n");
  CHECK(t.values("b") == std::vector<double>{2.5, -4.0});
  CHECK(t.text("name") == std::vector<std::string>{"x", "y"});
  CHECK(kind_of([&] { t.values("name"); }) == ErrorKind::Parse);
  CHECK(kind_of([&] { t.values("missing"); }) == ErrorKind::Format);
}
