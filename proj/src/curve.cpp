#include "btx/curve.hpp"
#include "btx/errors.hpp"
#include "btx/geom.hpp"
#include <algorithm>

namespace btx {

namespace {
// fixed generic sort direction for the canonical branch-point order
const cplx sort_dir = std::exp(cplx(0, 0.2371));
const double coincide_tol = 1e-12;
} // namespace

std::vector<cplx> Curve::singular_points() const {
  std::vector<cplx> s = alpha;
  for (auto& m : mroots) s.push_back(m.root);
  return s;
}

Curve build_curve(std::vector<cplx> branch_points, std::vector<MRoot> mroots, cplx scale) {
  require(!branch_points.empty() && branch_points.size() % 2 == 0, "OddBranchCount",
          "need an even number of branch points");
  require(std::abs(scale) > 0, "InvalidScale", "scale must be nonzero");
  for (size_t i = 0; i < branch_points.size(); ++i)
    for (size_t j = i + 1; j < branch_points.size(); ++j)
      require(std::abs(branch_points[i] - branch_points[j]) > coincide_tol,
              "DuplicateBranchPoint", "branch points must be pairwise distinct");
  for (auto& m : mroots) {
    require(m.mult >= 1, "InvalidMultiplicity", "multiplicity must be positive");
    for (cplx a : branch_points)
      require(std::abs(m.root - a) > coincide_tol, "RootCollision",
              "M-root coincides with a branch point");
  }
  Curve c;
  c.alpha = std::move(branch_points);
  std::sort(c.alpha.begin(), c.alpha.end(), [](cplx a, cplx b) {
    double pa = (a * std::conj(sort_dir)).real(), pb = (b * std::conj(sort_dir)).real();
    if (pa != pb) return pa < pb;
    return (a * std::conj(sort_dir)).imag() < (b * std::conj(sort_dir)).imag();
  });
  c.mroots = std::move(mroots);
  c.scale = scale;
  c.g = (int)c.alpha.size() / 2 - 1;
  std::vector<cplx> roots;
  for (auto& m : c.mroots)
    for (int k = 0; k < m.mult; ++k) roots.push_back(m.root);
  c.M = Poly::from_roots(roots);
  c.rmax = 0;
  for (cplx p : c.singular_points()) c.rmax = std::max(c.rmax, std::abs(p));
  c.min_gap = 1e300;
  for (size_t i = 0; i < c.alpha.size(); ++i)
    for (size_t j = i + 1; j < c.alpha.size(); ++j)
      c.min_gap = std::min(c.min_gap, std::abs(c.alpha[i] - c.alpha[j]));
  return c;
}

cplx Curve::wtilde_canonical(cplx x) const {
  require(std::abs(x) > rmax, "CanonicalRegion", "canonical branch needs |x| > rmax");
  cplx prod = 1;
  for (cplx a : alpha) prod *= psqrt(1.0 - a / x);
  cplx xp = 1;
  for (int k = 0; k < g + 1; ++k) xp *= x;
  return xp * prod;
}

cplx Curve::wtilde_step(cplx z0, cplx z1, cplx w0) const {
  // each factor (z - alpha_j) sweeps an argument < pi along a straight
  // segment that misses the root, so the principal square root of the
  // endpoint ratio is the exact continuation of that factor
  cplx r = w0;
  for (cplx a : alpha) {
    double tol = coincide_tol * (1.0 + std::max(std::abs(z0 - a), std::abs(z1 - a)));
    require(seg_point_dist(Seg{z0, z1}, a) > tol, "PathThroughSingularity",
            "segment passes through a branch point");
    r *= psqrt((z1 - a) / (z0 - a));
  }
  return r;
}

cplx Curve::wtilde_along(const Polyline& pts) const {
  require(pts.size() >= 1, "EmptyPath", "need at least one waypoint");
  cplx w = wtilde_canonical(pts[0]);
  for (size_t i = 1; i < pts.size(); ++i) w = wtilde_step(pts[i - 1], pts[i], w);
  return w;
}

std::vector<cplx> Curve::y_series_at_inf(int nterms) const {
  // prod (1 - alpha u) then sqrt, times the reversed M and scale
  Series prod(nterms);
  prod.c[0] = 1;
  for (cplx a : alpha) {
    Series f(nterms);
    f.c[0] = 1;
    if (nterms > 1) f.c[1] = -a;
    prod = Series::mul(prod, f);
  }
  Series s = Series::sqrt1(prod);
  Series mhat(nterms);
  int m = M.deg();
  for (int i = 0; i <= m && i < nterms; ++i) mhat.c[i] = M.c[m - i];
  Series y = Series::mul(mhat, s);
  std::vector<cplx> T(nterms);
  for (int k = 0; k < nterms; ++k) T[k] = scale * y.c[k];
  return T;
}

std::vector<cplx> Curve::inv_wtilde_series(int nterms) const {
  Series prod(nterms);
  prod.c[0] = 1;
  for (cplx a : alpha) {
    Series f(nterms);
    f.c[0] = 1;
    if (nterms > 1) f.c[1] = -a;
    prod = Series::mul(prod, f);
  }
  Series s = Series::pow1(prod, -0.5);
  return s.c;
}

cplx y_eval(const Curve& c, const SheetPath& path) {
  cplx wt = c.wtilde_along(path.pts);
  if (!path.plus_branch) wt = -wt;
  return c.y_from_wtilde(path.pts.back(), wt);
}

Potential potential_from_curve(const Curve& c) {
  int d = c.degree_vprime();
  std::vector<cplx> T = c.y_series_at_inf(d + 1);
  Poly vp;
  vp.c.assign(d + 1, cplx(0));
  for (int k = 0; k <= d; ++k) vp.c[d - k] = 2.0 * T[k];
  vp.trim(0.0);
  Potential p;
  p.Vprime = vp;
  p.V = vp.antiderivative();
  return p;
}

cplx infinity_residue(const Curve& c) {
  int d = c.degree_vprime();
  std::vector<cplx> T = c.y_series_at_inf(d + 2);
  return -T[d + 1];
}

} // namespace btx
