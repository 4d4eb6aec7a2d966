#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "btx/curve.hpp"
#include "btx/errors.hpp"
#include "btx/periods.hpp"
#include "btx/trajectory.hpp"

#include <algorithm>
#include <cmath>

using namespace btx;

namespace {

constexpr double kpi = 3.14159265358979323846;

template <class F> std::string error_code(F&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return "";
}

const Curve& hermite() {
  static Curve c = build_curve({-2.0, 2.0}, {}, 0.5);
  return c;
}

const CriticalGraph& hermite_graph() {
  static CriticalGraph g = build_critical_graph(hermite());
  return g;
}

const Curve& twocut() {
  static Curve c = build_curve({-2 * std::sqrt(2.0), -2.0, 2.0, 2 * std::sqrt(2.0)},
                               {{0.0, 1}}, 0.5);
  return c;
}

const CriticalGraph& twocut_graph() {
  static CriticalGraph g = build_critical_graph(twocut());
  return g;
}

// One-parameter quartic family with two complex conjugate-free branch points;
// the parameter below makes every branch-point pair integral purely imaginary
// once the curve is residue-normalized.
Curve quartic(double r) {
  std::vector<cplx> bp = {cplx(-1.0 - r, 0.0), std::polar(1.0, 2 * kpi / 3),
                          std::polar(1.0, kpi / 3), cplx(1.0 + r, 0.0)};
  Curve c0 = build_curve(bp, {}, 1.0);
  return build_curve(bp, {}, 1.0 / infinity_residue(c0));
}

const double kRStar = 0.41443647340957516;

const Curve& quartic_star() {
  static Curve c = quartic(kRStar);
  return c;
}

const CriticalGraph& quartic_graph() {
  static CriticalGraph g = build_critical_graph(quartic_star());
  return g;
}

int closed_count(const CriticalGraph& g) {
  int n = 0;
  for (const auto& a : g.arcs) n += a.v_to >= 0 ? 1 : 0;
  return n;
}

} // namespace

TEST_CASE("asymptotic escape directions") {
  auto dh = stokes_directions(hermite());
  REQUIRE(dh.size() == 4);
  CHECK(dh[0] == doctest::Approx(-3 * kpi / 4).epsilon(1e-12));
  CHECK(dh[1] == doctest::Approx(-kpi / 4).epsilon(1e-12));
  CHECK(dh[2] == doctest::Approx(kpi / 4).epsilon(1e-12));
  CHECK(dh[3] == doctest::Approx(3 * kpi / 4).epsilon(1e-12));

  auto dt = stokes_directions(twocut());
  REQUIRE(dt.size() == 8);
  for (int k = 0; k < 8; ++k)
    CHECK(dt[k] == doctest::Approx((2 * k - 7) * kpi / 8).epsilon(1e-12));

  auto dq = stokes_directions(quartic_star());
  REQUIRE(dq.size() == 6);
  for (int k = 0; k < 6; ++k)
    CHECK(dq[k] == doctest::Approx((k - 2) * kpi / 3).epsilon(1e-10));
}

TEST_CASE("level function on the hermite curve") {
  const Curve& c = hermite();
  HField hf = make_h_field(c);

  // frozen reference values (exact antiderivative)
  CHECK(std::abs(h_eval(c, hf, cplx(3.0, 0.0)) - 0.71462733300563537731) < 1e-9);
  CHECK(std::abs(h_eval(c, hf, cplx(1.0, 0.5)) - (-0.44078547068950723797)) < 1e-9);
  // branch points sit on the zero level
  CHECK(std::abs(h_eval(c, hf, cplx(2.0, 0.0))) < 1e-9);
  CHECK(std::abs(h_eval(c, hf, cplx(-2.0, 0.0))) < 1e-9);

  // closed form: h(3) = (3/4)sqrt(5) - log((3+sqrt(5))/2)
  double ref = 0.75 * std::sqrt(5.0) - std::log((3 + std::sqrt(5.0)) / 2);
  CHECK(std::abs(h_eval(c, hf, cplx(3.0, 0.0)) - ref) < 1e-11);
}

TEST_CASE("level field requires a normalized Boutroux curve") {
  Curve real4 = build_curve({-2.0, -1.0, 1.0, 2.0}, {}, 1.0);
  CHECK(error_code([&] { make_h_field(real4); }) == "NotBoutroux");
  Curve off = build_curve({-2.0, 2.0}, {}, 0.7);
  CHECK(error_code([&] { make_h_field(off); }) == "NotBoutroux");
  CHECK(error_code([&] { build_critical_graph(real4); }) == "NotBoutroux");
}

TEST_CASE("M root on the zero level is rejected") {
  // y = -(5/3)(x - 0.3) sqrt(x^2 - 4): residue-normalized, Boutroux, and the
  // M root 0.3 lies inside the branch cut locus where h vanishes
  Curve c = build_curve({-2.0, 2.0}, {{cplx(0.3, 0.0), 1}}, -5.0 / 3.0);
  CHECK(boutroux_residual(c).max_abs() < 1e-10);
  CHECK(error_code([&] { graph_vertices(c); }) == "CriticalMRoot");
}

TEST_CASE("twocut saddle level") {
  auto verts = twocut_graph().verts;
  REQUIRE(verts.size() == 5);
  CHECK(verts[4].saddle);
  // frozen reference: |h(0)| = (1/4) int_0^4 sqrt((4-u)(8-u)) du
  CHECK(std::abs(verts[4].abs_level - 3.3612671000997421212) < 1e-9);
}

TEST_CASE("hermite critical graph") {
  const Curve& c = hermite();
  const CriticalGraph& g = hermite_graph();
  REQUIRE(g.verts.size() == 2);
  REQUIRE(g.arcs.size() == 5);
  CHECK(closed_count(g) == 1);

  const TrajectoryArc& cut = g.arcs[0];
  CHECK(cut.v_from == 0);
  CHECK(cut.v_to == 1);
  CHECK(std::abs(cut.length - kpi) < 1e-6);
  // the arc is the real segment [-2, 2]
  for (cplx p : cut.pts) {
    CHECK(std::abs(p.imag()) < 1e-8);
    CHECK(p.real() > -2.0 - 1e-12);
    CHECK(p.real() < 2.0 + 1e-12);
  }
  CHECK(cut.pts.front() == c.alpha[0]);
  CHECK(cut.pts.back() == c.alpha[1]);

  for (const auto& v : g.verts) {
    CHECK(v.type == 3);
    CHECK(v.open_count == 2);
    CHECK(v.closed_count == 1);
  }
  // every escape direction is hit exactly once
  std::vector<int> hits(4, 0);
  for (const auto& a : g.arcs)
    if (a.v_to < 0) hits.at(a.dir_to)++;
  for (int h : hits) CHECK(h == 1);

  for (const auto& a : g.arcs) CHECK(a.drift_max < 1e-7);
}

TEST_CASE("retracing a closed arc from either end agrees") {
  const Curve& c = hermite();
  auto verts = graph_vertices(c);
  TrajectoryArc f = trace_horizontal(c, verts, 0, 1);
  TrajectoryArc b = trace_horizontal(c, verts, 1, 2);
  REQUIRE(f.v_to == 1);
  REQUIRE(b.v_to == 0);
  CHECK(std::abs(f.length - b.length) < 1e-8);
  CHECK(std::abs(f.length - kpi) < 1e-6);
}

TEST_CASE("hermite clock diagram") {
  const ClockDiagram d = clock_extract(hermite(), hermite_graph());
  CHECK(d.n == 2);
  CHECK(d.ndirs == 4);
  CHECK(d.P == 4);
  CHECK(d.S == 0);
  REQUIRE(d.faces.size() == 4);
  for (const auto& fc : d.faces) {
    CHECK(!fc.strip);
    CHECK(fc.sides.size() == 1);
  }
  CHECK(std::abs(d.ell[0] - kpi) < 1e-10);
  for (size_t i = 1; i < d.ell.size(); ++i) CHECK(std::isinf(d.ell[i]));
  CHECK(d.valency == std::vector<int>({3, 3}));
}

TEST_CASE("twocut critical graph and strips") {
  const Curve& c = twocut();
  const CriticalGraph& g = twocut_graph();
  REQUIRE(g.verts.size() == 5);
  REQUIRE(g.arcs.size() == 14);
  CHECK(closed_count(g) == 2);
  CHECK(g.arcs[0].v_from == 0);
  CHECK(g.arcs[0].v_to == 1);
  CHECK(g.arcs[1].v_from == 2);
  CHECK(g.arcs[1].v_to == 3);
  CHECK(g.verts[4].saddle);
  CHECK(g.verts[4].arcs.size() == 4);
  CHECK(g.verts[4].open_count == 4);

  const ClockDiagram d = clock_extract(c, g);
  CHECK(d.n == 6);
  CHECK(d.ndirs == 8);
  CHECK(d.P == 8);
  CHECK(d.S == 2);
  CHECK(d.faces.size() == 10);

  // cut lengths: int_{-2sqrt2}^{-2} |y| |dx| = pi/2 in closed form
  CHECK(std::abs(d.ell[0] - kpi / 2) < 1e-10);
  CHECK(std::abs(d.ell[1] - kpi / 2) < 1e-10);

  // escape direction multiplicities: strips pair up rims direction by direction
  std::vector<int> hits(8, 0);
  for (const auto& a : g.arcs)
    if (a.v_to < 0) hits.at(a.dir_to)++;
  CHECK(hits == std::vector<int>({1, 2, 2, 1, 1, 2, 2, 1}));

  // strip moduli: purely imaginary by conjugation symmetry, height equal to
  // the saddle level (frozen independent quadrature value)
  int nstrips = 0;
  for (const auto& fc : d.faces) {
    if (!fc.strip) {
      CHECK(fc.sides.size() == 1);
      continue;
    }
    ++nstrips;
    CHECK(fc.sides.empty());
    CHECK(std::abs(fc.rho.imag() - 3.3612671000997421212) < 1e-9);
    CHECK(std::abs(fc.rho.real()) < 1e-9);
  }
  CHECK(nstrips == 2);
}

TEST_CASE("quartic admissible topology at the tuned parameter") {
  const Curve& c = quartic_star();
  // residue normalization puts the leading coefficient on the imaginary axis
  CHECK(std::abs(c.scale - cplx(0.0, 1.3191824474314084)) < 1e-10);
  CHECK(boutroux_residual(c).max_abs() < 1e-9);

  const CriticalGraph& g = quartic_graph();
  REQUIRE(g.verts.size() == 4);
  REQUIRE(g.arcs.size() == 9);
  CHECK(closed_count(g) == 3);
  CHECK(g.arcs[0].v_from == 0);
  CHECK(g.arcs[0].v_to == 1);
  CHECK(g.arcs[1].v_from == 1);
  CHECK(g.arcs[1].v_to == 2);
  CHECK(g.arcs[2].v_from == 2);
  CHECK(g.arcs[2].v_to == 3);

  std::vector<int> types;
  for (const auto& v : g.verts) types.push_back(v.type);
  CHECK(types == std::vector<int>({3, 2, 2, 3}));

  std::vector<int> hits(6, 0);
  for (const auto& a : g.arcs)
    if (a.v_to < 0) hits.at(a.dir_to)++;
  CHECK(hits == std::vector<int>({1, 1, 1, 1, 1, 1}));

  const ClockDiagram d = clock_extract(c, g);
  CHECK(d.ndirs == 6);
  CHECK(d.P == 6);
  CHECK(d.S == 0);

  // the two outer cycles together are homologous to a large circle, so the
  // residue normalization pins their lengths: ell0 + ell2 = pi, and the
  // mirror symmetry of this curve splits it evenly
  CHECK(std::abs(d.ell[0] - kpi / 2) < 1e-9);
  CHECK(std::abs(d.ell[2] - kpi / 2) < 1e-9);
  // frozen middle pair integral (independent high-precision quadrature)
  CHECK(std::abs(d.ell[1] - 0.85210617017895036481) < 1e-9);
  CHECK(std::abs(d.ell[0] - d.ell[2]) < 1e-9);
}

TEST_CASE("quartic admissibility verdicts") {
  const Curve& c = quartic_star();
  const CriticalGraph& g = quartic_graph();

  AdmissibilityReport rep = admissibility_check(c, g, {0, 2});
  CHECK(rep.boutroux_ok);
  CHECK(rep.mroots_ok);
  CHECK(rep.cuts_negative);
  CHECK(rep.admissible);
  REQUIRE(rep.edge_margin.size() == 2);
  CHECK(rep.edge_margin[0] > 0);
  CHECK(rep.edge_margin[1] > 0);
  CHECK(rep.worst_side_h < 0);

  // open arcs cannot serve as cuts
  CHECK(error_code([&] { admissibility_check(c, g, {3}); }) == "TopologyMismatch");
}

TEST_CASE("a Boutroux curve that is not admissible") {
  // genus-1 curve with all pair integrals purely imaginary but a positive
  // h region leaning against one of its closed arcs
  std::vector<cplx> bp = {cplx(1.9969090618392085, 0.15555738186679105),
                          cplx(-1.9991849110412518, 0.60276418489575889),
                          cplx(0.99899499323412988, -0.0076348073291433258),
                          cplx(0.0031839150157710644, 0.88254104738029227)};
  Curve c0 = build_curve(bp, {}, 1.0);
  Curve c = build_curve(bp, {}, 1.0 / infinity_residue(c0));
  CHECK(boutroux_residual(c).max_abs() < 1e-9);

  CriticalGraph g = build_critical_graph(c);
  REQUIRE(g.arcs.size() == 9);
  CHECK(g.arcs[0].v_from == 0);
  CHECK(g.arcs[0].v_to == 1);
  CHECK(g.arcs[1].v_from == 1);
  CHECK(g.arcs[1].v_to == 2);
  CHECK(g.arcs[2].v_from == 2);
  CHECK(g.arcs[2].v_to == 3);
  std::vector<int> types;
  for (const auto& v : g.verts) types.push_back(v.type);
  CHECK(types == std::vector<int>({3, 2, 2, 3}));

  // the only pairing that covers every branch point once
  AdmissibilityReport rep = admissibility_check(c, g, {0, 2});
  CHECK(rep.boutroux_ok);
  CHECK(rep.mroots_ok);
  CHECK(!rep.cuts_negative);
  CHECK(!rep.admissible);
  CHECK(rep.worst_side_h > 0);
  REQUIRE(rep.edge_margin.size() == 2);
  CHECK(rep.edge_margin[0] > 0);
  CHECK(rep.edge_margin[1] < 0);
}

TEST_CASE("rounding the quartic parameter breaks the topology") {
  Curve c = quartic(0.4144);
  double res = boutroux_residual(c).max_abs();
  CHECK(res > 1e-6);
  CHECK(res < 1e-3);
  // with a loosened gate the trace runs, but the level degeneracy is gone:
  // the chain of three saddle connections reconnects into the mirror
  // symmetric pairs (outer long arc + middle arc)
  TraceOptions loose;
  loose.boutroux_tol = 1e-3;
  CriticalGraph g = build_critical_graph(c, loose);
  CHECK(closed_count(g) == 2);
  CHECK(g.arcs[0].v_from == 0);
  CHECK(g.arcs[0].v_to == 3);
  CHECK(g.arcs[1].v_from == 1);
  CHECK(g.arcs[1].v_to == 2);
  AdmissibilityReport rep = admissibility_check(c, g, {0, 1});
  CHECK(!rep.boutroux_ok);
  CHECK(!rep.admissible);
}

TEST_CASE("level evaluation beside cuts") {
  const Curve& c = hermite();
  const CriticalGraph& g = hermite_graph();
  HField hf = make_h_field(c);

  CHECK(error_code([&] { h_eval(c, hf, g, {0}, cplx(0.3, 0.0)); }) == "OnCutWithoutHint");

  double above = h_eval(c, hf, g, {0}, cplx(0.3, 0.0), SideHint{0, +1});
  double below = h_eval(c, hf, g, {0}, cplx(0.3, 0.0), SideHint{0, -1});
  CHECK(above < 0);
  CHECK(below < 0);

  // continuity across the cut: conjugate points agree on the cut complement
  double hp = h_eval(c, hf, g, {0}, cplx(1.0, 0.5));
  double hm = h_eval(c, hf, g, {0}, cplx(1.0, -0.5));
  CHECK(std::abs(hp - hm) < 1e-9);
  CHECK(std::abs(hp - (-0.44078547068950723797)) < 1e-9);

  AdmissibilityReport rep = admissibility_check(c, g, {0});
  CHECK(rep.admissible);
  CHECK(rep.edge_margin.size() == 1);
  CHECK(rep.edge_margin[0] > 0);
}

TEST_CASE("trace failure modes") {
  TraceOptions stall;
  stall.max_steps = 12;
  CHECK(error_code([&] { build_critical_graph(hermite(), stall); }) == "StallDetected");

  TraceOptions tight;
  tight.drift_tol = 1e-18;
  CHECK(error_code([&] { build_critical_graph(hermite(), tight); }) == "TraceTolExceeded");

  CriticalGraph tampered = hermite_graph();
  for (auto& a : tampered.arcs)
    if (a.v_to < 0) {
      a.dir_to = (a.dir_to + 2) % 4;
      break;
    }
  CHECK(error_code([&] { clock_extract(hermite(), tampered); }) ==
        "FaceClassificationFailure");
}
