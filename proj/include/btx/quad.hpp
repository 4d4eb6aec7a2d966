#pragma once
#include "btx/types.hpp"
#include <functional>

namespace btx {

struct QuadOpts {
  double rel_tol = 1e-10;
  double abs_tol = 1e-14;
  int max_intervals = 4000;
};

struct QuadResult {
  std::vector<cplx> value;
  double err = 0;
  long evals = 0;
};

// Global-adaptive Gauss-Kronrod 7/15 for vector integrands on [a,b].
// f(t, out) writes dim complex components.
QuadResult gk_integrate(const std::function<void(double, cplx*)>& f, int dim, double a,
                        double b, const QuadOpts& opts = {});

// Scalar convenience wrapper.
cplx gk_integrate1(const std::function<cplx(double)>& f, double a, double b,
                   const QuadOpts& opts = {}, double* err = nullptr);

// -(1/2pi i) * contour integral of f over the CCW circle |x - c| = R
// (equals the x^{-1} coefficient sign convention used for residues at infinity
// when the circle encloses all finite singularities).
cplx residue_at_infinity_circle(const std::function<cplx(cplx)>& f, cplx c, double R,
                                int n = 512);

} // namespace btx
