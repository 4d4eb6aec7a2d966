#pragma once
#include "btx/poly.hpp"

namespace btx {

struct MRoot {
  cplx root;
  int mult = 1;
};

// Nodal hyperelliptic curve y^2 = scale^2 M^2(x) prod_j (x - alpha_j).
// alpha is stored in a deterministic canonical order (projection onto a fixed
// generic direction); the canonical branch at infinity has
// y / x^(g+1+deg M) -> scale.
struct Curve {
  std::vector<cplx> alpha;
  std::vector<MRoot> mroots;
  cplx scale = 1.0;
  int g = 0;
  Poly M; // monic product of (x - root)^mult

  double rmax = 1;    // radius containing all singular points
  double min_gap = 1; // min pairwise distance between branch points

  double escape_radius() const { return 4 * rmax + 4; }
  double anchor_radius() const { return 1.5 * rmax + 1; }
  int degree_vprime() const { return g + 1 + M.deg(); }
  std::vector<cplx> singular_points() const;

  // bare radical wt(x) = sqrt(prod (x - alpha_j))
  cplx wtilde_canonical(cplx x) const; // requires |x| > rmax
  // exact continuation along the straight segment z0 -> z1
  cplx wtilde_step(cplx z0, cplx z1, cplx w0) const;
  // continuation along a polyline seeded with the canonical branch at pts[0]
  cplx wtilde_along(const Polyline& pts) const;

  cplx y_from_wtilde(cplx x, cplx wt) const { return scale * M(x) * wt; }

  // coefficients T_k of y = x^d sum_k T_k u^k at u = 1/x, d = g+1+deg M
  std::vector<cplx> y_series_at_inf(int nterms) const;
  // coefficients c_k of 1/wt = x^-(g+1) sum_k c_k u^k
  std::vector<cplx> inv_wtilde_series(int nterms) const;
};

Curve build_curve(std::vector<cplx> branch_points, std::vector<MRoot> mroots, cplx scale);

struct SheetPath {
  Polyline pts;            // first point must be in the canonical region |x| > rmax
  bool plus_branch = true; // false: start from the negated branch
};

cplx y_eval(const Curve& c, const SheetPath& path);

struct Potential {
  Poly V;      // V(0) = 0
  Poly Vprime; // degree g+1+deg M
};

Potential potential_from_curve(const Curve& c);
cplx infinity_residue(const Curve& c);

} // namespace btx
