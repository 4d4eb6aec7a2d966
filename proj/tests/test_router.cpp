#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "btx/router.hpp"
#include "btx/types.hpp"

#include <cmath>

using namespace btx;

namespace {

// crossing checker independent of Scene internals
bool path_crosses(const Polyline& p, const std::vector<Seg>& obs) {
  for (std::size_t i = 0; i + 1 < p.size(); ++i)
    for (const Seg& s : obs)
      if (seg_seg_cross(Seg{p[i], p[i + 1]}, s)) return true;
  return false;
}

double path_point_dist(const Polyline& p, cplx q) {
  return polyline_point_dist(p, q);
}

} // namespace

TEST_CASE("straight segment when nothing blocks") {
  Scene sc({{cplx(0, 5), cplx(0, 7)}}, {cplx(0, 6)}, 0.1);
  sc.finalize();
  Polyline p = sc.route(cplx(-1, 0), cplx(1, 0));
  REQUIRE(p.size() >= 2);
  CHECK(std::abs(p.front() - cplx(-1, 0)) < 1e-12);
  CHECK(std::abs(p.back() - cplx(1, 0)) < 1e-12);
  CHECK(p.size() == 2);
}

TEST_CASE("route around a wall avoids crossing and keeps point clearance") {
  std::vector<Seg> wall = {{cplx(0, -2), cplx(0, 2)}};
  std::vector<cplx> sing = {cplx(0, -2), cplx(0, 2)};
  Scene sc(wall, sing, 0.15);
  sc.finalize();
  Polyline p = sc.route(cplx(-1.5, 0.3), cplx(1.5, -0.4));
  REQUIRE(p.size() >= 2);
  CHECK(std::abs(p.front() - cplx(-1.5, 0.3)) < 1e-12);
  CHECK(std::abs(p.back() - cplx(1.5, -0.4)) < 1e-12);
  CHECK(!path_crosses(p, wall));
  CHECK(path_point_dist(p, cplx(0, 2)) > 0.4 * 0.15);
  CHECK(path_point_dist(p, cplx(0, -2)) > 0.4 * 0.15);
}

TEST_CASE("endpoints hugging a wall are legal as long as nothing is crossed") {
  std::vector<Seg> wall = {{cplx(0, -2), cplx(0, 2)}};
  Scene sc(wall, {cplx(0, -2), cplx(0, 2)}, 0.15);
  sc.finalize();
  // both endpoints on the same side, one of them 1e-9 away from the wall
  Polyline p = sc.route(cplx(-1e-9, 0.5), cplx(-1.2, -0.7));
  CHECK(!path_crosses(p, wall));
}

TEST_CASE("far endpoints descend radially and avoid the ray") {
  std::vector<Seg> wall = {{cplx(-1, 0), cplx(1, 0)}};
  Scene sc(wall, {cplx(-1, 0), cplx(1, 0)}, 0.1);
  sc.set_ray(cplx(1, 0), 0.0); // ray along positive real axis
  sc.finalize();
  cplx far1 = std::polar(900.0, 0.05); // nearly on top of the ray
  cplx far2 = std::polar(700.0, pi * 0.9);
  Polyline p = sc.route(far1, far2);
  REQUIRE(p.size() >= 2);
  CHECK(std::abs(p.front() - far1) < 1e-9 * 900);
  CHECK(std::abs(p.back() - far2) < 1e-9 * 700);
  // check against the truncated ray as a long finite segment
  std::vector<Seg> rayseg = {{cplx(1, 0), cplx(5000, 0)}};
  CHECK(!path_crosses(p, rayseg));
  CHECK(!path_crosses(p, wall));
}

TEST_CASE("mixed near and far routing stays legal") {
  std::vector<Seg> cuts = {{cplx(-2, 0), cplx(-1, 1)}, {cplx(1, -1), cplx(2, 0.5)}};
  std::vector<cplx> sing = {cplx(-2, 0), cplx(-1, 1), cplx(1, -1), cplx(2, 0.5)};
  Scene sc(cuts, sing, 0.1);
  sc.set_ray(cplx(2, 0.5), 0.3);
  sc.finalize();
  std::vector<Seg> rayseg = {{cplx(2, 0.5), cplx(2, 0.5) + 4000.0 * std::exp(iu * 0.3)}};
  cplx far = std::polar(500.0, 0.35); // close to the ray direction
  cplx in(0.2, 0.1);
  for (auto [a, b] : {std::pair<cplx, cplx>{far, in}, {in, far}}) {
    Polyline p = sc.route(a, b);
    REQUIRE(p.size() >= 2);
    CHECK(std::abs(p.front() - a) < 1e-6);
    CHECK(std::abs(p.back() - b) < 1e-6);
    CHECK(!path_crosses(p, cuts));
    CHECK(!path_crosses(p, rayseg));
    for (cplx s : sing) CHECK(path_point_dist(p, s) > 0.04);
  }
}
