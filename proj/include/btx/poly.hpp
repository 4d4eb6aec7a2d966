#pragma once
#include "btx/types.hpp"

namespace btx {

// Dense polynomial, coefficients ascending: c[k] multiplies x^k.
struct Poly {
  std::vector<cplx> c;

  Poly() = default;
  explicit Poly(std::vector<cplx> coeffs) : c(std::move(coeffs)) { trim(); }
  static Poly constant(cplx v) { return Poly({v}); }
  static Poly from_roots(const std::vector<cplx>& roots, cplx lead = 1.0);

  int deg() const { return static_cast<int>(c.size()) - 1; } // -1 for zero poly
  cplx operator()(cplx x) const;
  Poly derivative() const;
  Poly antiderivative() const; // constant term 0
  Poly& trim(double tol = 0.0);

  friend Poly operator*(const Poly& a, const Poly& b);
  friend Poly operator+(const Poly& a, const Poly& b);
  friend Poly operator-(const Poly& a, const Poly& b);
  friend Poly operator*(cplx s, const Poly& a);
};

// Truncated power series sum c[k] u^k, fixed length.
struct Series {
  std::vector<cplx> c;

  explicit Series(int n = 0) : c(n, cplx(0)) {}
  int len() const { return static_cast<int>(c.size()); }

  static Series mul(const Series& a, const Series& b);
  // sqrt of a series with c[0] = 1 (principal branch, value 1 at u=0)
  static Series sqrt1(const Series& a);
  // reciprocal of a series with c[0] != 0
  static Series inv(const Series& a);
  // (series with c[0]=1) raised to a real power
  static Series pow1(const Series& a, double e);
  cplx eval(cplx u) const;
};

} // namespace btx
