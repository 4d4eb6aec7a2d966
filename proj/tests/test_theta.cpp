#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "btx/curve.hpp"
#include "btx/errors.hpp"
#include "btx/periods.hpp"
#include "btx/theta.hpp"

#include <cmath>
#include <map>
#include <random>

using namespace btx;

static Curve square_curve() {
  return build_curve({cplx(1), cplx(-1), cplx(0, 1), cplx(0, -1)}, {}, cplx(1));
}

static Curve real_curve() {
  return build_curve({cplx(-2), cplx(-1), cplx(1), cplx(2)}, {}, cplx(1));
}

static Curve genus2_curve() {
  return build_curve({cplx(-3.1, 0.2), cplx(-1.6, -0.4), cplx(-0.1, 0.5),
                      cplx(1.2, -0.6), cplx(2.3, 0.7), cplx(3.4, -0.1)},
                     {{cplx(0.8, 1.4), 1}}, cplx(1));
}

static Eigen::MatrixXcd tau_g1(cplx t) {
  Eigen::MatrixXcd m(1, 1);
  m(0, 0) = t;
  return m;
}

static Eigen::MatrixXcd tau_g2_generic() {
  Eigen::MatrixXcd m(2, 2);
  m(0, 0) = cplx(0.3, 1.1);
  m(0, 1) = m(1, 0) = cplx(0.12, 0.35);
  m(1, 1) = cplx(-0.2, 1.6);
  return m;
}

static Eigen::VectorXcd vec1(cplx a) {
  Eigen::VectorXcd v(1);
  v << a;
  return v;
}

static Eigen::VectorXcd vec2(cplx a, cplx b) {
  Eigen::VectorXcd v(2);
  v << a, b;
  return v;
}

// relative distance of two scaled values
static double sdist(const Scaled& a, const Scaled& b) {
  Scaled q = a / b;
  return std::abs(q.value() - 1.0);
}

TEST_CASE("scaled arithmetic round trip") {
  Scaled a = Scaled::of(cplx(3, 4));
  CHECK(std::abs(a.value() - cplx(3, 4)) < 1e-15);
  Scaled big{cplx(0.5, 0.1), 800.0};
  Scaled small{cplx(2.0, -1.0), -805.0};
  cplx prod = (big * small).value();
  cplx want = cplx(0.5, 0.1) * cplx(2.0, -1.0) * std::exp(-5.0);
  CHECK(std::abs(prod - want) < 1e-15);
  Scaled s = big + Scaled{cplx(1, 0), 780.0};
  CHECK(std::abs((s / Scaled{cplx(1), 800.0}).value() - (cplx(0.5, 0.1) + std::exp(-20.0))) < 1e-12);
  CHECK(std::abs((big.pow_int(3) / big / big / big).value() - 1.0) < 1e-13);
}

TEST_CASE("lemniscatic value matches the closed form") {
  ThetaContext ctx(tau_g1(cplx(0, 1)));
  CHECK(ctx.radius() >= 6);
  CHECK(std::abs(ctx.theta(Eigen::VectorXcd::Zero(1)) - 1.08643481121330801457) < 1e-13);
  cplx got = ctx.theta(vec1(cplx(0.3, 0.2)));
  CHECK(std::abs(got - cplx(0.9492444694105808091, -0.1326821563817818715)) < 1e-13);
}

TEST_CASE("real curve tau reproduces the one dimensional series") {
  Curve c = real_curve();
  PeriodData pd = riemann_matrix(c, standard_basis(c));
  ThetaContext ctx(pd.tau);
  cplx got = ctx.theta(Eigen::VectorXcd::Zero(1));
  CHECK(std::abs(got - 1.014721821714583323) < 1e-6);
}

TEST_CASE("diagonal tau factorizes") {
  Eigen::MatrixXcd tau = Eigen::MatrixXcd::Zero(2, 2);
  tau(0, 0) = cplx(0, 1);
  tau(1, 1) = cplx(0, 2);
  ThetaContext ctx(tau);
  cplx got = ctx.theta(vec2(cplx(0.1, -0.3), cplx(0.2, 0.1)));
  CHECK(std::abs(got - cplx(1.2377155509789482064, 0.1608609244784287696)) < 1e-12);
}

TEST_CASE("parity and symmetry identities") {
  ThetaContext ctx(tau_g2_generic());
  std::mt19937 rng(20260819u);
  std::uniform_real_distribution<double> U(-0.8, 0.8);
  auto rv = [&] { return vec2(cplx(U(rng), U(rng)), cplx(U(rng), U(rng))); };
  for (int it = 0; it < 5; ++it) {
    Eigen::VectorXcd z = rv();
    CHECK(std::abs(ctx.theta(z) - ctx.theta(-z)) < 1e-12 * std::abs(ctx.theta(z)));
  }
  // integer characteristics: reflection multiplies by the parity sign
  for (int mask = 0; mask < 16; ++mask) {
    Eigen::VectorXcd eps = vec2(mask & 1, (mask >> 1) & 1);
    Eigen::VectorXcd del = vec2((mask >> 2) & 1, (mask >> 3) & 1);
    double par = std::real(eps.cwiseProduct(del).sum());
    cplx sign = std::abs(std::remainder(par, 2.0)) > 0.5 ? -1.0 : 1.0;
    Eigen::VectorXcd z = rv();
    Scaled l = ctx.theta_char_s(eps, del, -z);
    Scaled r = ctx.theta_char_s(eps, del, z);
    r.mant *= sign;
    CHECK(sdist(l, r) < 1e-11);
  }
  // complex characteristics: simultaneous reflection of z and the pair
  for (int it = 0; it < 5; ++it) {
    Eigen::VectorXcd A = rv(), B = rv(), z = rv();
    Scaled l = ctx.theta_char_s(A, B, z);
    Scaled r = ctx.theta_char_s(-A, -B, -z);
    CHECK(sdist(l, r) < 1e-11);
  }
}

TEST_CASE("integer characteristic shifts") {
  ThetaContext ctx(tau_g2_generic());
  const cplx I(0, 1);
  const double PI = 3.14159265358979323846;
  std::mt19937 rng(7u);
  std::uniform_real_distribution<double> U(-0.6, 0.6);
  std::uniform_int_distribution<int> Z(-2, 2);
  for (int it = 0; it < 10; ++it) {
    Eigen::VectorXcd eps = vec2(Z(rng), Z(rng)), del = vec2(Z(rng), Z(rng));
    Eigen::VectorXcd a = vec2(Z(rng), Z(rng)), b = vec2(Z(rng), Z(rng));
    Eigen::VectorXcd z = vec2(cplx(U(rng), U(rng)), cplx(U(rng), U(rng)));
    Scaled l = ctx.theta_char_s(eps + 2.0 * a, del + 2.0 * b, z);
    Scaled r = ctx.theta_char_s(eps, del, z);
    r.mant *= std::exp(I * PI * eps.cwiseProduct(b).sum());
    CHECK(sdist(l, r) < 1e-11);
  }
}

TEST_CASE("quasi periodicity over random lattice shifts") {
  ThetaContext ctx(tau_g2_generic());
  const Eigen::MatrixXcd& tau = ctx.tau();
  const cplx I(0, 1);
  const double PI = 3.14159265358979323846;
  std::mt19937 rng(42u);
  std::uniform_real_distribution<double> U(-0.7, 0.7);
  std::uniform_int_distribution<int> Z(-3, 3);
  std::uniform_int_distribution<int> C(0, 1);
  for (int it = 0; it < 50; ++it) {
    Eigen::VectorXcd z = vec2(cplx(U(rng), U(rng)), cplx(U(rng), U(rng)));
    Eigen::VectorXcd lam = vec2(Z(rng), Z(rng)), mu = vec2(Z(rng), Z(rng));
    Eigen::VectorXcd eps = vec2(C(rng), C(rng)), del = vec2(C(rng), C(rng));
    Scaled l = ctx.theta_char_s(eps, del, z + lam + tau * mu);
    cplx E = I * PI * (eps.cwiseProduct(lam).sum() - del.cwiseProduct(mu).sum()) -
             I * PI * mu.cwiseProduct(tau * mu).sum() -
             2.0 * I * PI * z.cwiseProduct(mu).sum();
    Scaled r = ctx.theta_char_s(eps, del, z) *
               Scaled{std::exp(I * E.imag()), E.real()}.norm();
    CHECK(sdist(l, r) < 1e-10);
  }
}

TEST_CASE("huge lattice shifts stay representable") {
  ThetaContext ctx(tau_g2_generic());
  const Eigen::MatrixXcd& tau = ctx.tau();
  const cplx I(0, 1);
  const double PI = 3.14159265358979323846;
  Eigen::VectorXcd z = vec2(cplx(0.21, -0.13), cplx(-0.05, 0.17));
  Eigen::VectorXcd mu = vec2(15, -12);
  Scaled l = ctx.theta_s(z + tau * mu);
  CHECK(l.lg > 700.0); // overflows a bare double
  cplx E = -I * PI * mu.cwiseProduct(tau * mu).sum() -
           2.0 * I * PI * z.cwiseProduct(mu).sum();
  Scaled r = ctx.theta_s(z) * Scaled{std::exp(I * E.imag()), E.real()}.norm();
  CHECK(sdist(l, r) < 1e-10);
}

TEST_CASE("one dimensional heat flow") {
  // d theta / d tau = -(i/4pi) d^2 theta / dz^2 for the series in use
  const cplx I(0, 1);
  const double PI = 3.14159265358979323846;
  cplx tau0(0.3, 0.9);
  double h = 1e-4;
  Eigen::VectorXcd z = vec1(cplx(0.23, 0.11));
  ThetaContext cp(tau_g1(tau0 + h)), cm(tau_g1(tau0 - h)), c0(tau_g1(tau0));
  cplx dtau = (cp.theta(z) - cm.theta(z)) / (2 * h);
  cplx dzz = (c0.theta(vec1(z[0] + h)) - 2.0 * c0.theta(z) + c0.theta(vec1(z[0] - h))) / (h * h);
  CHECK(std::abs(dtau + (I / (4 * PI)) * dzz) < 1e-5 * std::abs(dtau));
}

TEST_CASE("gradients match central differences") {
  ThetaContext ctx(tau_g2_generic());
  double h = 1e-5;
  Eigen::VectorXcd z = vec2(cplx(0.31, -0.22), cplx(-0.14, 0.19));
  Eigen::VectorXcd g = ctx.theta_grad(z);
  for (int j = 0; j < 2; ++j) {
    Eigen::VectorXcd zp = z, zm = z;
    zp[j] += h;
    zm[j] -= h;
    cplx fd = (ctx.theta(zp) - ctx.theta(zm)) / (2 * h);
    CHECK(std::abs(g[j] - fd) < 1e-6 * std::abs(fd));
  }
}

static std::string key_of(const HalfPeriod& hp) {
  std::string s;
  for (int i = 0; i < hp.eps.size(); ++i) s += char('0' + hp.eps[i]);
  for (int i = 0; i < hp.del.size(); ++i) s += char('0' + hp.del[i]);
  return s;
}

TEST_CASE("square curve branch dictionary") {
  Curve c = square_curve();
  PeriodData pd = riemann_matrix(c, standard_basis(c));
  AbelData ad = make_abel_data(c, pd);
  ThetaContext ctx = ThetaContext::for_curve(c, pd, ad);
  REQUIRE(ctx.has_dictionary());

  // base point maps to the zero class, all four classes distinct
  CHECK(ctx.branch_class(0).eps.isZero());
  CHECK(ctx.branch_class(0).del.isZero());
  std::map<std::string, int> seen;
  for (int k = 0; k < 4; ++k) seen[key_of(ctx.branch_class(k))]++;
  CHECK(seen.size() == 4);

  // the lone odd characteristic is [1;1]; with an empty block it equals the
  // Riemann constant class
  CHECK(ctx.delta_block().empty());
  CHECK(ctx.delta().eps[0] == 1);
  CHECK(ctx.delta().del[0] == 1);
  CHECK(ctx.riemann_constant().eps[0] == 1);
  CHECK(ctx.riemann_constant().del[0] == 1);

  // one odd and three even classes over all admissible blocks
  std::map<std::string, bool> classes;
  classes[key_of(ctx.partition_to_halfperiod({}))] =
      ctx.partition_to_halfperiod({}).odd();
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j) {
      HalfPeriod hp = ctx.partition_to_halfperiod({i, j});
      classes[key_of(hp)] = hp.odd();
    }
  CHECK(classes.size() == 4);
  int odd = 0;
  for (auto& kv : classes) odd += kv.second;
  CHECK(odd == 1);

  // numeric singularity pattern at the origin
  double scale0 = std::abs(ctx.theta(Eigen::VectorXcd::Zero(1)));
  for (auto& kv : classes) {
    Eigen::VectorXcd eps = vec1(kv.first[0] - '0'), del = vec1(kv.first[1] - '0');
    double v = std::abs(ctx.theta_char(eps, del, Eigen::VectorXcd::Zero(1)));
    if (kv.second) CHECK(v < 1e-10 * scale0);
    else CHECK(v > 1e-6 * scale0);
  }
  CHECK(ctx.theta_char_grad0(ctx.delta()).norm() > 1e-6);
}

TEST_CASE("genus two branch dictionary") {
  Curve c = genus2_curve();
  PeriodData pd = riemann_matrix(c, standard_basis(c));
  AbelData ad = make_abel_data(c, pd);
  ThetaContext ctx = ThetaContext::for_curve(c, pd, ad);

  std::map<std::string, bool> classes;
  for (int i = 0; i < 6; ++i) {
    HalfPeriod hp = ctx.partition_to_halfperiod({i});
    CHECK(hp.odd());
    classes[key_of(hp)] = true;
  }
  CHECK(classes.size() == 6);
  std::map<std::string, int> even_hits;
  for (int i = 0; i < 6; ++i)
    for (int j = i + 1; j < 6; ++j)
      for (int k = j + 1; k < 6; ++k) {
        HalfPeriod hp = ctx.partition_to_halfperiod({i, j, k});
        CHECK(!hp.odd());
        even_hits[key_of(hp)]++;
      }
  // complementary blocks land on the same class, so ten classes hit twice
  CHECK(even_hits.size() == 10);
  for (auto& kv : even_hits) CHECK(kv.second == 2);
  for (auto& kv : even_hits) classes[kv.first] = false;
  CHECK(classes.size() == 16);

  double scale0 = std::abs(ctx.theta(Eigen::VectorXcd::Zero(2)));
  for (auto& kv : classes) {
    Eigen::VectorXcd eps = vec2(kv.first[0] - '0', kv.first[1] - '0');
    Eigen::VectorXcd del = vec2(kv.first[2] - '0', kv.first[3] - '0');
    double v = std::abs(ctx.theta_char(eps, del, Eigen::VectorXcd::Zero(2)));
    if (kv.second) CHECK(v < 1e-10 * scale0);
    else CHECK(v > 1e-6 * scale0);
  }

  // every odd characteristic here is nonsingular
  for (int i = 0; i < 6; ++i)
    CHECK(ctx.theta_char_grad0(ctx.partition_to_halfperiod({i})).norm() > 1e-6);
}

TEST_CASE("bad partitions rejected") {
  Curve c = genus2_curve();
  PeriodData pd = riemann_matrix(c, standard_basis(c));
  AbelData ad = make_abel_data(c, pd);
  ThetaContext ctx = ThetaContext::for_curve(c, pd, ad);
  CHECK_THROWS_WITH_AS(ctx.partition_to_halfperiod({0, 0, 1}), doctest::Contains("BadPartition"), Error);
  CHECK_THROWS_WITH_AS(ctx.partition_to_halfperiod({0, 1}), doctest::Contains("BadPartition"), Error);
  CHECK_THROWS_WITH_AS(ctx.partition_to_halfperiod({0, 1, 2, 3}), doctest::Contains("BadPartition"), Error);
  CHECK_THROWS_WITH_AS(ctx.partition_to_halfperiod({17}), doctest::Contains("BadPartition"), Error);
}

TEST_CASE("c_delta matches the expansion at infinity") {
  for (int which = 0; which < 2; ++which) {
    Curve c = which ? genus2_curve() : square_curve();
    PeriodData pd = riemann_matrix(c, standard_basis(c));
    AbelData ad = make_abel_data(c, pd);
    ThetaContext ctx = ThetaContext::for_curve(c, pd, ad);
    cplx cd = c_delta(ctx, pd);
    CHECK(std::abs(cd) > 1e-8);
    Eigen::VectorXcd e = ctx.delta().eps.cast<double>().cast<cplx>();
    Eigen::VectorXcd d = ctx.delta().del.cast<double>().cast<cplx>();
    for (double R : {1000.0, 2000.0}) {
      cplx p = R * std::exp(cplx(0, 0.7));
      Eigen::VectorXcd arg = abel_map(c, pd, ad, p) - ad.u_inf;
      cplx val = ctx.theta_char(e, d, arg);
      CHECK(std::abs(p * val / cd - 1.0) < 6.0 / R);
    }
  }
}
