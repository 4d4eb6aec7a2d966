#include "btx/poly.hpp"
#include "btx/errors.hpp"

namespace btx {

Poly Poly::from_roots(const std::vector<cplx>& roots, cplx lead) {
  Poly p({lead});
  for (cplx r : roots) p = p * Poly({-r, cplx(1)});
  return p;
}

cplx Poly::operator()(cplx x) const {
  cplx v = 0;
  for (size_t k = c.size(); k-- > 0;) v = v * x + c[k];
  return v;
}

Poly Poly::derivative() const {
  Poly d;
  if (c.size() <= 1) return d;
  d.c.resize(c.size() - 1);
  for (size_t k = 1; k < c.size(); ++k) d.c[k - 1] = double(k) * c[k];
  return d;
}

Poly Poly::antiderivative() const {
  Poly a;
  a.c.resize(c.size() + 1, cplx(0));
  for (size_t k = 0; k < c.size(); ++k) a.c[k + 1] = c[k] / double(k + 1);
  return a;
}

Poly& Poly::trim(double tol) {
  while (!c.empty() && std::abs(c.back()) <= tol) c.pop_back();
  return *this;
}

Poly operator*(const Poly& a, const Poly& b) {
  Poly r;
  if (a.c.empty() || b.c.empty()) return r;
  r.c.assign(a.c.size() + b.c.size() - 1, cplx(0));
  for (size_t i = 0; i < a.c.size(); ++i)
    for (size_t j = 0; j < b.c.size(); ++j) r.c[i + j] += a.c[i] * b.c[j];
  return r;
}

Poly operator+(const Poly& a, const Poly& b) {
  Poly r;
  r.c.resize(std::max(a.c.size(), b.c.size()), cplx(0));
  for (size_t i = 0; i < a.c.size(); ++i) r.c[i] += a.c[i];
  for (size_t i = 0; i < b.c.size(); ++i) r.c[i] += b.c[i];
  return r.trim();
}

Poly operator-(const Poly& a, const Poly& b) { return a + (cplx(-1) * b); }

Poly operator*(cplx s, const Poly& a) {
  Poly r = a;
  for (auto& v : r.c) v *= s;
  return r;
}

Series Series::mul(const Series& a, const Series& b) {
  int n = std::min(a.len(), b.len());
  Series r(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j + i < n && j < b.len(); ++j) r.c[i + j] += a.c[i] * b.c[j];
  return r;
}

Series Series::sqrt1(const Series& a) { return pow1(a, 0.5); }

Series Series::inv(const Series& a) {
  require(a.len() > 0 && std::abs(a.c[0]) > 0, "SeriesInversion", "zero constant term");
  int n = a.len();
  Series r(n);
  r.c[0] = 1.0 / a.c[0];
  for (int k = 1; k < n; ++k) {
    cplx s = 0;
    for (int j = 1; j <= k; ++j) s += a.c[j] * r.c[k - j];
    r.c[k] = -s / a.c[0];
  }
  return r;
}

// (1 + s)^e via the differential equation: a r' = e a' r with a = series, r = a^e.
Series Series::pow1(const Series& a, double e) {
  int n = a.len();
  Series r(n);
  if (n == 0) return r;
  r.c[0] = 1.0; // a.c[0] must be 1
  for (int k = 1; k < n; ++k) {
    // k r_k = sum_{j=1..k} (e j - (k - j)) a_j r_{k-j}
    cplx s = 0;
    for (int j = 1; j <= k; ++j) s += (e * double(j) - double(k - j)) * a.c[j] * r.c[k - j];
    r.c[k] = s / double(k);
  }
  return r;
}

cplx Series::eval(cplx u) const {
  cplx v = 0;
  for (size_t k = c.size(); k-- > 0;) v = v * u + c[k];
  return v;
}

} // namespace btx
