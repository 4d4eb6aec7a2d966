#pragma once
#include "btx/curve.hpp"
#include "btx/periods.hpp"

#include <Eigen/Dense>

namespace btx {

// value = mant * exp(lg); keeps theta quotients representable when the
// quasi-periodic exponential factors overflow double range
struct Scaled {
  cplx mant{0.0};
  double lg = 0.0;

  cplx value() const { return mant * std::exp(lg); }
  static Scaled of(cplx v) { return Scaled{v, 0.0}.norm(); }
  Scaled norm() const {
    if (mant == cplx(0.0)) return {0.0, 0.0};
    double m = std::abs(mant);
    return {mant / m, lg + std::log(m)};
  }
  friend Scaled operator*(const Scaled& a, const Scaled& b) {
    return Scaled{a.mant * b.mant, a.lg + b.lg}.norm();
  }
  friend Scaled operator/(const Scaled& a, const Scaled& b) {
    return Scaled{a.mant / b.mant, a.lg - b.lg}.norm();
  }
  friend Scaled operator+(const Scaled& a, const Scaled& b) {
    if (a.mant == cplx(0.0)) return b;
    if (b.mant == cplx(0.0)) return a;
    double L = std::max(a.lg, b.lg);
    return Scaled{a.mant * std::exp(a.lg - L) + b.mant * std::exp(b.lg - L), L}.norm();
  }
  friend Scaled operator-(const Scaled& a, const Scaled& b) {
    return a + Scaled{-b.mant, b.lg};
  }
  Scaled pow_int(int k) const {
    if (mant == cplx(0.0)) return *this;
    return Scaled{std::pow(mant, k), lg * k}.norm();
  }
};

// integer characteristic class: the half-period (del + tau*eps)/2 mod lattice
struct HalfPeriod {
  Eigen::VectorXi eps, del;
  bool odd() const { return (eps.dot(del) % 2 + 2) % 2 == 1; }
};

// complex characteristic pair in the convention 2z = del + tau*eps
struct Characteristic {
  Eigen::VectorXcd eps, del;
};

// Truncated Riemann theta machinery for a fixed tau with Im tau positive
// definite. Arguments are reduced by the period lattice before summation, so
// evaluations stay accurate for arbitrarily large |Im z|; results carry the
// quasi-periodic exponential in log scale.
class ThetaContext {
public:
  explicit ThetaContext(const Eigen::MatrixXcd& tau);
  // context with the branch-point half-period dictionary and the cached odd
  // nonsingular characteristic
  static ThetaContext for_curve(const Curve& c, const PeriodData& pd,
                                const AbelData& ad);

  int g() const { return g_; }
  const Eigen::MatrixXcd& tau() const { return tau_; }
  int radius() const { return R_; }
  double imz_budget() const { return budget_; }

  Scaled theta_s(const Eigen::VectorXcd& z) const;
  cplx theta(const Eigen::VectorXcd& z) const { return theta_s(z).value(); }
  Scaled theta_char_s(const Eigen::VectorXcd& eps, const Eigen::VectorXcd& del,
                      const Eigen::VectorXcd& z) const;
  cplx theta_char(const Eigen::VectorXcd& eps, const Eigen::VectorXcd& del,
                  const Eigen::VectorXcd& z) const {
    return theta_char_s(eps, del, z).value();
  }
  Scaled theta_char_s(const HalfPeriod& hp, const Eigen::VectorXcd& z) const {
    return theta_char_s(hp.eps.cast<double>().cast<cplx>(),
                        hp.del.cast<double>().cast<cplx>(), z);
  }

  // gradient of the plain theta sum, valid where the lattice reduction of z is
  // trivial or mild (used at the origin and at half-period shifts)
  Eigen::VectorXcd theta_grad(const Eigen::VectorXcd& z) const;
  // gradient of theta with integer characteristic at z = 0
  Eigen::VectorXcd theta_char_grad0(const HalfPeriod& hp) const;

  // ---- branch dictionary (available from for_curve only) ----
  bool has_dictionary() const { return has_dict_; }
  // half-period class of the Abel image of branch point k
  const HalfPeriod& branch_class(int k) const;
  // vector of Riemann constants as a half-period class
  const HalfPeriod& riemann_constant() const;
  // class of sum over the block's branch Abel images minus the Riemann
  // constant; block sizes g+1-2m only
  HalfPeriod partition_to_halfperiod(const std::vector<int>& block) const;
  // cached odd nonsingular characteristic and its defining block
  const HalfPeriod& delta() const;
  const std::vector<int>& delta_block() const;

private:
  int g_ = 0;
  Eigen::MatrixXcd tau_;
  int R_ = 6;
  double budget_ = 0;
  double lam_min_ = 0;
  bool has_dict_ = false;
  std::vector<HalfPeriod> branch_;
  HalfPeriod kvec_;
  HalfPeriod delta_;
  std::vector<int> delta_block_;
  void pick_radius();
};

// the leading coefficient of Theta_Delta along the Abel image of a point
// approaching infinity on the canonical branch
cplx c_delta(const ThetaContext& ctx, const PeriodData& pd);

} // namespace btx
