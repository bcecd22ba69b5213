#include "sgcp/domain.hpp"

#include "test_support.hpp"

#include <doctest.h>

#include <fstream>
#include <random>

using namespace sgcp;
using sgcp::testing::TempDir;

TEST_CASE("domain volume is the product of side lengths") {
  CHECK(domain_volume(Domain({{0.0, 50.0}})) == 50.0);
  CHECK(domain_volume(Domain({{0.0, 1.0}, {0.0, 1.0}})) == 1.0);
  CHECK(domain_volume(Domain({{0.0, 2.0}, {0.0, 3.0}})) == 6.0);
  CHECK(domain_volume(Domain({{0.0, 3.0}, {0.0, 2.0}})) == 6.0);
}

TEST_CASE("domain rejects empty or inverted bounds") {
  CHECK_THROWS_AS(Domain({}), Error);
  CHECK_THROWS_AS(Domain({{1.0, 1.0}}), Error);
  CHECK_THROWS_AS(Domain({{0.0, 1.0}, {3.0, 2.0}}), Error);
}

TEST_CASE("domain is closed") {
  const Domain d({{0.0, 1.0}, {-1.0, 1.0}});
  CHECK(d.contains(Eigen::Vector2d(0.0, -1.0)));
  CHECK(d.contains(Eigen::Vector2d(1.0, 1.0)));
  CHECK_FALSE(d.contains(Eigen::Vector2d(1.0 + 1e-12, 0.0)));
}

TEST_CASE("point pattern rejects points outside the domain") {
  const Domain d({{0.0, 50.0}});
  PointMatrix p(2, 1);
  p << 10.0, 51.0;
  try {
    PointPattern pattern(p, d);
    FAIL("expected an error");
  } catch (const Error &e) {
    const std::string msg = e.what();
    CHECK(msg.find("point outside domain") != std::string::npos);
    CHECK(msg.find("51") != std::string::npos);
  }
}

TEST_CASE("load_point_pattern parses values, headers and empty files") {
  TempDir dir("domain");
  const Domain d({{0.0, 50.0}});
  {
    std::ofstream(dir.path() / "three.csv") << "0.1\n24.9\n49.0\n";
    const PointPattern p = load_point_pattern(dir.path() / "three.csv", d);
    CHECK(p.size() == 3);
    CHECK(p.point(1)[0] == doctest::Approx(24.9));
  }
  {
    std::ofstream(dir.path() / "empty.csv") << "";
    CHECK(load_point_pattern(dir.path() / "empty.csv", d).size() == 0);
  }
  {
    std::ofstream(dir.path() / "header.csv") << "x\n1.5\n2.5\n";
    CHECK(load_point_pattern(dir.path() / "header.csv", d).size() == 2);
  }
  {
    std::ofstream(dir.path() / "outside.csv") << "1.0\n51.0\n";
    CHECK_THROWS_WITH_AS(load_point_pattern(dir.path() / "outside.csv", d), doctest::Contains("point outside domain"),
                         Error);
  }
  {
    std::ofstream(dir.path() / "garbage.csv") << "1.0\nabc\n";
    CHECK_THROWS_WITH_AS(load_point_pattern(dir.path() / "garbage.csv", d), doctest::Contains("row 2"), Error);
  }
  {
    const Domain d2({{0.0, 1.0}, {0.0, 1.0}});
    std::ofstream(dir.path() / "ragged.csv") << "0.1,0.2\n0.3\n";
    CHECK_THROWS_AS(load_point_pattern(dir.path() / "ragged.csv", d2), Error);
  }
  CHECK_THROWS_AS(load_point_pattern(dir.path() / "missing.csv", d), Error);
}

TEST_CASE("save then load reproduces coordinates bit-exactly") {
  TempDir dir("roundtrip");
  const Domain d({{0.0, 1.0}, {-3.0, 7.0}});
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  PointMatrix pts(200, 2);
  for (int i = 0; i < 200; ++i) {
    pts(i, 0) = u(rng);
    pts(i, 1) = -3.0 + 10.0 * u(rng);
  }
  const PointPattern original(pts, d);
  save_point_pattern(dir.path() / "p.csv", original);
  const PointPattern loaded = load_point_pattern(dir.path() / "p.csv", d);
  REQUIRE(loaded.size() == original.size());
  CHECK((loaded.points().array() == original.points().array()).all());
}
