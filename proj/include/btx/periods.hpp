#pragma once
#include "btx/curve.hpp"
#include "btx/quad.hpp"

#include <Eigen/Dense>
#include <functional>

namespace btx {

// integrand bundle evaluated pointwise along a continued path: receives the
// plane point and the continued branch of wtilde there, writes dim components
using EdgeBundle = std::function<void(cplx x, cplx wt, cplx* out)>;

struct BundleResult {
  std::vector<cplx> value;
  cplx w_end = 0; // continued wtilde at the final waypoint (0 at a branch point)
};

// Integrate f along the polyline with wtilde seeded w0 at pts[0].
// If t2_end_branch >= 0, pts.back() must equal alpha[t2_end_branch]; the last
// edge is traversed with the x = alpha + t^2(q - alpha) substitution so
// integrands with a 1/wtilde factor stay bounded.
BundleResult integrate_bundle(const Curve& c, const Polyline& pts, cplx w0, int dim,
                              const EdgeBundle& f, int t2_end_branch = -1,
                              const QuadOpts& opts = {});

// A homology cycle realized as one or more closed plane loops; each loop
// closes on the surface (even branch-point winding) and carries the wtilde
// value at its first vertex, continued from the shared far anchor.
struct Cycle {
  std::vector<Polyline> loops;
  std::vector<cplx> seed_w;
  std::vector<int> enclosed; // branch indices the realization was built around
};

struct Homology {
  std::vector<Cycle> a, b;
  double margin = 0; // min distance of any loop to any singular point
};

// Sum of integrate_bundle over the loops of a cycle; verifies surface closure
// of the continued branch on every loop.
std::vector<cplx> cycle_integral(const Curve& c, const Cycle& cyc, int dim,
                                 const EdgeBundle& f, const QuadOpts& opts = {});

// Canonical symplectic basis: a_j encircles the branch pair (2j, 2j+1)
// (0-based), b_j encircles branch points 1..2j. Realized as offset-region
// boundaries around routed chains, verified and sign-repaired so the numeric
// intersection pairing is exactly symplectic with a_j . b_j = +1.
// rho_scale scales the default offset margins (property tests use it to check
// path independence of the periods).
Homology standard_basis(const Curve& c, double rho_scale = 1.0);

struct PeriodData {
  Eigen::MatrixXcd sigma; // row j: coefficients of omega_j over x^{k-1}dx/wt
  Eigen::MatrixXcd tau;
  Eigen::MatrixXcd Amat, Bmat; // raw period matrices after basis normalization
  Eigen::VectorXcd ay, by;     // periods of y dx
  Homology basis;              // final cycles (b possibly shifted by a's)
};

// Periods of the holomorphic basis and of y dx over the given cycles, the
// normalized-differential coefficients, and the Riemann matrix. Re tau is
// reduced to [-1/2,1/2] by an integer symmetric shift realized on the
// b-cycles, so the returned basis and tau stay consistent.
PeriodData riemann_matrix(const Curve& c, const Homology& h);

// Abel map plumbing. All values are integrals of the normalized differentials
// with base point alpha_1, computed through a fixed far anchor point.
struct AbelData {
  cplx anchor = 0;
  Eigen::VectorXcd base_leg; // int_anchor^{alpha_1} omega
  Eigen::VectorXcd u_inf;    // u(infinity on the canonical branch)
};

AbelData make_abel_data(const Curve& c, const PeriodData& pd);

// u(p) along an internally routed path from the anchor; plus_sheet selects the
// canonical branch seed at the anchor (false negates it).
Eigen::VectorXcd abel_map(const Curve& c, const PeriodData& pd, const AbelData& ad,
                          cplx p, bool plus_sheet = true);
// u(alpha_k) for a branch point (sheet-independent).
Eigen::VectorXcd abel_map_branch(const Curve& c, const PeriodData& pd, const AbelData& ad,
                                 int k);
// u(path end) for an explicit path starting at the anchor (pts[0] == anchor).
Eigen::VectorXcd abel_map_path(const Curve& c, const PeriodData& pd, const AbelData& ad,
                               const Polyline& pts, bool plus_sheet = true,
                               int t2_end_branch = -1);

// Integer lattice decomposition v = lambda + tau mu + remainder.
void lattice_reduce(const Eigen::MatrixXcd& tau, const Eigen::VectorXcd& v,
                    Eigen::VectorXi& lambda, Eigen::VectorXi& mu,
                    Eigen::VectorXcd* remainder = nullptr);
// true if 2v is within tol of the integer lattice (v is a half-period).
bool is_half_period(const Eigen::MatrixXcd& tau, const Eigen::VectorXcd& v,
                    Eigen::VectorXi& lambda, Eigen::VectorXi& mu, double tol = 1e-8);

struct BoutrouxResidual {
  std::vector<double> re_pair; // Re int_{alpha_1}^{alpha_k} y dx, k = 2..2g+2
  cplx res_deviation = 0;      // res_{inf+} y dx - 1
  double max_abs() const;
};

BoutrouxResidual boutroux_residual(const Curve& c);

// Integral of the dim-component bundle from the anchor to branch point k,
// routed around all other singular points, final approach regularized.
BundleResult integrate_to_branch(const Curve& c, cplx anchor, int k, int dim,
                                 const EdgeBundle& f, const QuadOpts& opts = {});

} // namespace btx
