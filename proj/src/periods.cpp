#include "btx/periods.hpp"
#include "btx/errors.hpp"
#include "btx/geom.hpp"
#include "btx/router.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

namespace btx {

namespace {

const cplx generic_dir = std::exp(cplx(0, 0.2371));

cplx default_anchor(const Curve& c) { return c.anchor_radius() * generic_dir; }

// wtilde along one straight edge relative to its start value, evaluated at an
// interior point; exact because each factor sweeps less than pi
cplx wt_partial(const Curve& c, cplx z0, cplx x, cplx w0) {
  cplx r = w0;
  for (cplx a : c.alpha) r *= psqrt((x - a) / (z0 - a));
  return r;
}

struct EdgeJob {
  cplx z0, z1;
  cplx w0;      // wtilde at z0
  int t2 = -1;  // branch index if z1 is that branch point (t^2 approach)
};

void run_edge(const Curve& c, const EdgeJob& e, int dim, const EdgeBundle& f,
              const QuadOpts& opts, std::vector<cplx>& acc) {
  if (std::abs(e.z1 - e.z0) == 0) return;
  QuadResult r;
  if (e.t2 < 0) {
    cplx dz = e.z1 - e.z0;
    r = gk_integrate(
        [&](double t, cplx* out) {
          cplx x = e.z0 + t * dz;
          cplx wt = wt_partial(c, e.z0, x, e.w0);
          f(x, wt, out);
          for (int i = 0; i < dim; ++i) out[i] *= dz;
        },
        dim, 0, 1, opts);
  } else {
    // x(t) = b + (1-t)^2 (q - b), q = z0, b = alpha[t2]; the branch-point
    // factor of wtilde is exactly (1-t) times a smooth product
    cplx b = c.alpha[e.t2];
    cplx qb = e.z0 - b;
    r = gk_integrate(
        [&](double t, cplx* out) {
          double s = 1 - t;
          cplx x = b + s * s * qb;
          cplx wt = e.w0 * s;
          for (size_t j = 0; j < c.alpha.size(); ++j) {
            if ((int)j == e.t2) continue;
            wt *= psqrt((x - c.alpha[j]) / (e.z0 - c.alpha[j]));
          }
          f(x, wt, out);
          cplx dxdt = -2.0 * s * qb;
          for (int i = 0; i < dim; ++i) out[i] *= dxdt;
        },
        dim, 0, 1, opts);
  }
  for (int i = 0; i < dim; ++i) acc[i] += r.value[i];
}

double polyline_min_dist_points(const Polyline& p, const std::vector<cplx>& pts) {
  double d = 1e300;
  for (cplx s : pts) d = std::min(d, polyline_point_dist(p, s));
  return d;
}

struct CrossingReport {
  int pairing = 0;
  bool degenerate = false;
};

// cumulative wtilde at each vertex of an explicitly closed loop
std::vector<cplx> cum_w(const Curve& c, const Polyline& loop, cplx w0) {
  std::vector<cplx> cw(loop.size());
  cw[0] = w0;
  for (size_t i = 0; i + 1 < loop.size(); ++i)
    cw[i + 1] = c.wtilde_step(loop[i], loop[i + 1], cw[i]);
  return cw;
}

// Signed plane-crossing count restricted to same-sheet crossings. Sheets are
// compared through the continued branches carried by each loop, which are both
// referenced to the shared anchor, so agreement of the continued values means
// the crossing happens at one surface point.
CrossingReport surface_pairing(const Curve& c, const Cycle& ca, const Cycle& cb) {
  CrossingReport rep;
  for (size_t la = 0; la < ca.loops.size(); ++la) {
    const Polyline& A = ca.loops[la];
    std::vector<cplx> cwa = cum_w(c, A, ca.seed_w[la]);
    for (size_t lb = 0; lb < cb.loops.size(); ++lb) {
      const Polyline& B = cb.loops[lb];
      std::vector<cplx> cwb = cum_w(c, B, cb.seed_w[lb]);
      for (size_t i = 0; i + 1 < A.size(); ++i) {
        for (size_t j = 0; j + 1 < B.size(); ++j) {
          double t, u;
          if (!seg_seg_cross(Seg{A[i], A[i + 1]}, Seg{B[j], B[j + 1]}, &t, &u)) continue;
          if (std::min({t, 1 - t, u, 1 - u}) < 1e-6) {
            rep.degenerate = true;
            continue;
          }
          cplx z = A[i] + t * (A[i + 1] - A[i]);
          cplx wa = wt_partial(c, A[i], z, cwa[i]);
          cplx wb = wt_partial(c, B[j], z, cwb[j]);
          double ds = std::abs(wa - wb), dn = std::abs(wa + wb);
          double ratio = ds / (std::abs(wa) + std::abs(wb));
          if (ratio > 0.1 && ratio < 0.9) {
            rep.degenerate = true;
            continue;
          }
          if (ds < dn) {
            cplx d1 = A[i + 1] - A[i], d2 = B[j + 1] - B[j];
            double cr = std::imag(std::conj(d1) * d2);
            rep.pairing += cr > 0 ? 1 : -1;
          }
        }
      }
    }
  }
  return rep;
}

void reverse_cycle(Cycle& cyc) {
  for (size_t l = 0; l < cyc.loops.size(); ++l)
    std::reverse(cyc.loops[l].begin(), cyc.loops[l].end());
  // loops are explicitly closed, so the first vertex (and its seed) is unchanged
}

Polyline route_with_clearance(const std::vector<cplx>& avoid, double clearance,
                              cplx from, cplx to) {
  Scene sc({}, avoid, clearance);
  sc.finalize();
  return sc.route(from, to);
}

// seed wtilde at a point near the branch points by continuation from the anchor
cplx seed_from_anchor(const Curve& c, cplx anchor, cplx p) {
  std::vector<cplx> sing = c.singular_points();
  double ds = 1e300;
  for (cplx s : sing) ds = std::min(ds, std::abs(p - s));
  double clearance = std::min(0.5 * c.min_gap, 2.0 * ds);
  Polyline r = route_with_clearance(sing, clearance, anchor, p);
  return c.wtilde_along(r);
}

struct CycleBuild {
  Cycle cyc;
  double margin = 0;
};

// Realize the cycle with net winding +1 around the listed branch points and 0
// around the rest, as the boundary loops of an offset tube around a routed
// chain through them. Loops winding around no branch point (including loops
// around nodes) are contractible on the smooth model and are dropped.
CycleBuild build_cycle(const Curve& c, const std::vector<int>& enclosed,
                       double rho_scale) {
  std::vector<cplx> sing = c.singular_points();
  std::vector<cplx> excluded;
  for (size_t i = 0; i < sing.size(); ++i) {
    bool in = false;
    for (int e : enclosed)
      if (std::abs(sing[i] - c.alpha[e]) < 1e-14) in = true;
    if (!in) excluded.push_back(sing[i]);
  }
  cplx anchor = default_anchor(c);
  double floor_rho = 0.07 * c.min_gap;
  // the router only guarantees a fraction of the requested clearance, and the
  // useful fix differs per failure mode, so vary the request instead of
  // shrinking it monotonically
  const double route_mult[8] = {1.0, 1.3, 0.75, 1.6, 0.55, 1.9, 0.4, 2.3};

  for (int attempt = 0; attempt < 8; ++attempt) try {
    double route_clear = 0.9 * c.min_gap * route_mult[attempt];
    Polyline chain;
    for (size_t i = 0; i + 1 < enclosed.size(); ++i) {
      Polyline leg = route_with_clearance(excluded, route_clear,
                                          c.alpha[enclosed[i]], c.alpha[enclosed[i + 1]]);
      if (chain.empty())
        chain = leg;
      else
        chain.insert(chain.end(), leg.begin() + 1, leg.end());
    }
    if (chain.empty()) chain.push_back(c.alpha[enclosed[0]]);

    double d_exc = 1e300;
    for (cplx s : excluded) d_exc = std::min(d_exc, polyline_point_dist(chain, s));
    double rho = std::min(0.45 * d_exc, 0.3 * c.min_gap) * rho_scale;
    if (rho < floor_rho) continue;

    double lo = 1e300, hi = -1e300;
    for (cplx z : chain) {
      lo = std::min({lo, z.real(), z.imag()});
      hi = std::max({hi, z.real(), z.imag()});
    }
    double span = (hi - lo) + 4 * rho;
    int grid_n = std::clamp((int)std::ceil(3.0 * span / rho), 64, 1600);
    std::vector<Polyline> loops = offset_region_boundary(chain, rho, grid_n);

    std::vector<Polyline> kept;
    std::vector<std::vector<int>> wind_kept;
    bool parity_ok = true;
    for (Polyline& L : loops) {
      std::vector<int> wb(c.alpha.size());
      int total = 0, absum = 0;
      for (size_t k = 0; k < c.alpha.size(); ++k) {
        wb[k] = winding_number(L, c.alpha[k]);
        total += wb[k];
        absum += std::abs(wb[k]);
      }
      if (absum == 0) continue;
      if (total % 2 != 0) parity_ok = false;
      L.push_back(L.front()); // close explicitly
      kept.push_back(std::move(L));
      wind_kept.push_back(std::move(wb));
    }
    if (!parity_ok || kept.empty()) continue;

    std::vector<int> net(c.alpha.size(), 0);
    for (auto& wb : wind_kept)
      for (size_t i = 0; i < net.size(); ++i) net[i] += wb[i];
    bool ok = true;
    for (size_t i = 0; i < net.size(); ++i) {
      int want = 0;
      for (int e : enclosed)
        if ((int)i == e) want = 1;
      if (net[i] != want) ok = false;
    }
    if (!ok) continue;

    CycleBuild out;
    out.cyc.enclosed = enclosed;
    out.margin = 1e300;
    bool closed_ok = true;
    for (Polyline& L : kept) {
      out.margin = std::min(out.margin, polyline_min_dist_points(L, sing));
      cplx w0 = seed_from_anchor(c, anchor, L[0]);
      std::vector<cplx> cw = cum_w(c, L, w0);
      if (std::abs(cw.back() - cw.front()) > 1e-8 * std::abs(cw.front())) {
        closed_ok = false;
        break;
      }
      out.cyc.loops.push_back(std::move(L));
      out.cyc.seed_w.push_back(w0);
    }
    if (!closed_ok) continue;
    return out;
  } catch (const Error&) {
    continue; // routing infeasible at this clearance; try the next setting
  }
  fail("MarginUnachievable", "no valid offset loop realization found");
}

} // namespace

BundleResult integrate_bundle(const Curve& c, const Polyline& pts, cplx w0, int dim,
                              const EdgeBundle& f, int t2_end_branch,
                              const QuadOpts& opts) {
  require(pts.size() >= 2, "InternalError", "bundle path needs at least one edge");
  if (t2_end_branch >= 0)
    require(std::abs(pts.back() - c.alpha[t2_end_branch]) < 1e-12 * (1 + c.rmax),
            "InternalError", "regularized path must end at the named branch point");
  BundleResult res;
  res.value.assign(dim, 0);
  cplx w = w0;
  for (size_t i = 0; i + 1 < pts.size(); ++i) {
    EdgeJob e;
    e.z0 = pts[i];
    e.z1 = pts[i + 1];
    e.w0 = w;
    bool last = (i + 2 == pts.size());
    e.t2 = last ? t2_end_branch : -1;
    run_edge(c, e, dim, f, opts, res.value);
    w = (e.t2 >= 0) ? cplx(0) : c.wtilde_step(e.z0, e.z1, w);
  }
  res.w_end = w;
  return res;
}

std::vector<cplx> cycle_integral(const Curve& c, const Cycle& cyc, int dim,
                                 const EdgeBundle& f, const QuadOpts& opts) {
  std::vector<cplx> acc(dim, 0);
  for (size_t l = 0; l < cyc.loops.size(); ++l) {
    BundleResult r = integrate_bundle(c, cyc.loops[l], cyc.seed_w[l], dim, f, -1, opts);
    require(std::abs(r.w_end - cyc.seed_w[l]) <= 1e-7 * std::abs(cyc.seed_w[l]),
            "InternalError", "cycle loop does not close on the surface");
    for (int i = 0; i < dim; ++i) acc[i] += r.value[i];
  }
  return acc;
}

Homology standard_basis(const Curve& c, double rho_scale) {
  Homology h;
  if (c.g == 0) return h;
  h.margin = 1e300;

  for (int j = 1; j <= c.g; ++j) {
    CycleBuild cb = build_cycle(c, {2 * j, 2 * j + 1}, rho_scale);
    h.margin = std::min(h.margin, cb.margin);
    h.a.push_back(cb.cyc);
  }

  for (int j = 1; j <= c.g; ++j) {
    std::vector<int> s;
    for (int i = 1; i <= 2 * j; ++i) s.push_back(i);
    // stagger nested tube radii so boundaries of b_i and b_j never coincide
    double stagger = std::pow(0.88, j - 1);
    double jitter = 1.0;
    bool done = false;
    for (int attempt = 0; attempt < 6 && !done; ++attempt, jitter *= 0.93) {
      CycleBuild cb = build_cycle(c, s, rho_scale * stagger * jitter);
      bool degenerate = false;
      std::vector<int> row(c.g, 0);
      for (int i = 0; i < c.g; ++i) {
        CrossingReport rep = surface_pairing(c, h.a[i], cb.cyc);
        if (rep.degenerate) {
          degenerate = true;
          break;
        }
        row[i] = rep.pairing;
      }
      if (degenerate) continue;
      int self = row[j - 1];
      if (self != 1 && self != -1) continue;
      if (self == -1) reverse_cycle(cb.cyc);
      bool cross_ok = true;
      for (int i = 0; i < c.g; ++i)
        if (i != j - 1 && row[i] != 0) cross_ok = false;
      if (!cross_ok) continue;
      h.margin = std::min(h.margin, cb.margin);
      h.b.push_back(cb.cyc);
      done = true;
    }
    require(done, "InternalError", "could not realize a symplectic b-cycle");
  }

  for (int i = 0; i < c.g; ++i)
    for (int j = i + 1; j < c.g; ++j) {
      require(surface_pairing(c, h.a[i], h.a[j]).pairing == 0, "InternalError",
              "a-cycles intersect on the surface");
      require(surface_pairing(c, h.b[i], h.b[j]).pairing == 0, "InternalError",
              "b-cycles intersect on the surface");
    }
  require(h.margin >= 0.05 * c.min_gap, "MarginUnachievable",
          "realized margin below 0.05 of the branch gap");
  return h;
}

PeriodData riemann_matrix(const Curve& c, const Homology& h) {
  PeriodData pd;
  pd.basis = h;
  int g = c.g;
  pd.sigma.resize(g, g);
  pd.tau.resize(g, g);
  pd.Amat.resize(g, g);
  pd.Bmat.resize(g, g);
  pd.ay.resize(g);
  pd.by.resize(g);
  if (g == 0) return pd;

  EdgeBundle holo = [&](cplx x, cplx wt, cplx* out) {
    cplx p = 1.0 / wt;
    for (int k = 0; k < g; ++k) {
      out[k] = p;
      p *= x;
    }
  };
  EdgeBundle ydx = [&](cplx x, cplx wt, cplx* out) { out[0] = c.y_from_wtilde(x, wt); };

  for (int i = 0; i < g; ++i) {
    std::vector<cplx> ra = cycle_integral(c, h.a[i], g, holo);
    std::vector<cplx> rb = cycle_integral(c, h.b[i], g, holo);
    for (int k = 0; k < g; ++k) {
      pd.Amat(i, k) = ra[k];
      pd.Bmat(i, k) = rb[k];
    }
    pd.ay(i) = cycle_integral(c, h.a[i], 1, ydx)[0];
    pd.by(i) = cycle_integral(c, h.b[i], 1, ydx)[0];
  }

  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(pd.Amat);
  double smin = svd.singularValues().minCoeff();
  double smax = svd.singularValues().maxCoeff();
  require(smin > 0 && smax / smin < 1e12, "IllConditionedPeriods",
          "a-period matrix condition number too large");

  pd.sigma = pd.Amat.transpose().fullPivLu().inverse();
  pd.tau = (pd.sigma * pd.Bmat.transpose()).transpose();
  double asym = (pd.tau - pd.tau.transpose()).cwiseAbs().maxCoeff();
  require(asym < 1e-6 * (1 + pd.tau.cwiseAbs().maxCoeff()), "IllConditionedPeriods",
          "Riemann matrix failed the symmetry check");
  pd.tau = 0.5 * (pd.tau + pd.tau.transpose()).eval();

  Eigen::MatrixXd imt = pd.tau.imag();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(imt);
  require(es.eigenvalues().minCoeff() > 0, "IllConditionedPeriods",
          "Im tau is not positive definite");

  // reduce Re tau to [-1/2,1/2] with a symmetric integer shift carried by the
  // b-cycles, so tau and the realized cycles stay consistent
  Eigen::MatrixXd re = 0.5 * (pd.tau.real() + pd.tau.real().transpose());
  Eigen::MatrixXi N(g, g);
  bool shift = false;
  for (int i = 0; i < g; ++i)
    for (int j = 0; j < g; ++j) {
      N(i, j) = (int)std::lround(-re(i, j));
      if (N(i, j) != 0) shift = true;
    }
  if (shift) {
    require((N - N.transpose()).cwiseAbs().maxCoeff() == 0, "IllConditionedPeriods",
            "non-symmetric integer reduction of Re tau");
    for (int i = 0; i < g; ++i) {
      for (int k = 0; k < g; ++k) {
        int m = N(i, k);
        for (int rep = 0; rep < std::abs(m); ++rep) {
          Cycle add = pd.basis.a[k];
          if (m < 0) reverse_cycle(add);
          for (size_t l = 0; l < add.loops.size(); ++l) {
            pd.basis.b[i].loops.push_back(add.loops[l]);
            pd.basis.b[i].seed_w.push_back(add.seed_w[l]);
          }
        }
      }
    }
    Eigen::MatrixXcd Nc = N.cast<double>().cast<cplx>();
    pd.tau += Nc;
    pd.Bmat += Nc * pd.Amat;
    pd.by += Nc * pd.ay;
  }
  return pd;
}

AbelData make_abel_data(const Curve& c, const PeriodData& pd) {
  AbelData ad;
  ad.anchor = default_anchor(c);
  int g = c.g;
  ad.base_leg.resize(g);
  ad.u_inf.resize(g);
  if (g == 0) return ad;

  EdgeBundle holo = [&](cplx x, cplx wt, cplx* out) {
    cplx p = 1.0 / wt;
    for (int k = 0; k < g; ++k) {
      out[k] = p;
      p *= x;
    }
  };
  BundleResult leg = integrate_to_branch(c, ad.anchor, 0, g, holo);
  Eigen::VectorXcd raw(g);
  for (int k = 0; k < g; ++k) raw(k) = leg.value[k];
  ad.base_leg = pd.sigma * raw;

  // tail int_anchor^inf x^{k-1} dx/wt by term-wise antiderivatives of the
  // large-|x| series of 1/wt; every exponent is <= -2 so there is no log term
  int nm = 90;
  std::vector<cplx> cm = c.inv_wtilde_series(nm);
  Eigen::VectorXcd tail(g);
  for (int k = 1; k <= g; ++k) {
    cplx s = 0;
    for (int m = 0; m < nm; ++m) {
      double e = k - 1 - (c.g + 1) - m; // x^e
      s += -cm[m] * std::pow(ad.anchor, e + 1) / (e + 1);
    }
    tail(k - 1) = s;
  }
  ad.u_inf = pd.sigma * tail - ad.base_leg;
  return ad;
}

static Eigen::VectorXcd abel_raw_to_u(const PeriodData& pd, const AbelData& ad,
                                      const std::vector<cplx>& raw, bool plus_sheet) {
  Eigen::VectorXcd v(pd.sigma.rows());
  for (int k = 0; k < v.size(); ++k) v(k) = raw[k];
  Eigen::VectorXcd u = pd.sigma * v - ad.base_leg;
  // the involution fixes the base branch point, so the opposite-sheet value is
  // the exact negative along the mirrored path
  return plus_sheet ? u : Eigen::VectorXcd(-u);
}

Eigen::VectorXcd abel_map_path(const Curve& c, const PeriodData& pd, const AbelData& ad,
                               const Polyline& pts, bool plus_sheet, int t2_end_branch) {
  int g = c.g;
  EdgeBundle holo = [&](cplx x, cplx wt, cplx* out) {
    cplx p = 1.0 / wt;
    for (int k = 0; k < g; ++k) {
      out[k] = p;
      p *= x;
    }
  };
  require(std::abs(pts.front() - ad.anchor) < 1e-9 * (1 + std::abs(ad.anchor)),
          "InternalError", "abel path must start at the anchor");
  BundleResult r =
      integrate_bundle(c, pts, c.wtilde_canonical(ad.anchor), g, holo, t2_end_branch);
  return abel_raw_to_u(pd, ad, r.value, plus_sheet);
}

Eigen::VectorXcd abel_map(const Curve& c, const PeriodData& pd, const AbelData& ad,
                          cplx p, bool plus_sheet) {
  std::vector<cplx> sing = c.singular_points();
  double ds = 1e300;
  for (cplx s : sing) ds = std::min(ds, std::abs(p - s));
  require(ds > 1e-9 * (1 + std::abs(p)), "PathThroughSingularity",
          "abel target is a singular point; use abel_map_branch");
  double clearance = std::min(0.45 * c.min_gap, 2.0 * ds);
  Polyline r = route_with_clearance(sing, clearance, ad.anchor, p);
  return abel_map_path(c, pd, ad, r, plus_sheet, -1);
}

Eigen::VectorXcd abel_map_branch(const Curve& c, const PeriodData& pd, const AbelData& ad,
                                 int k) {
  int g = c.g;
  EdgeBundle holo = [&](cplx x, cplx wt, cplx* out) {
    cplx p = 1.0 / wt;
    for (int i = 0; i < g; ++i) {
      out[i] = p;
      p *= x;
    }
  };
  BundleResult r = integrate_to_branch(c, ad.anchor, k, g, holo);
  return abel_raw_to_u(pd, ad, r.value, true);
}

void lattice_reduce(const Eigen::MatrixXcd& tau, const Eigen::VectorXcd& v,
                    Eigen::VectorXi& lambda, Eigen::VectorXi& mu,
                    Eigen::VectorXcd* remainder) {
  int g = (int)tau.rows();
  Eigen::VectorXd m = tau.imag().fullPivLu().solve(v.imag());
  mu.resize(g);
  lambda.resize(g);
  for (int i = 0; i < g; ++i) mu(i) = (int)std::lround(m(i));
  Eigen::VectorXcd rest = v - tau * mu.cast<double>().cast<cplx>();
  for (int i = 0; i < g; ++i) lambda(i) = (int)std::lround(rest(i).real());
  if (remainder) *remainder = rest - lambda.cast<double>().cast<cplx>();
}

bool is_half_period(const Eigen::MatrixXcd& tau, const Eigen::VectorXcd& v,
                    Eigen::VectorXi& lambda, Eigen::VectorXi& mu, double tol) {
  Eigen::VectorXcd rem;
  lattice_reduce(tau, 2.0 * v, lambda, mu, &rem);
  return rem.cwiseAbs().maxCoeff() < tol;
}

BundleResult integrate_to_branch(const Curve& c, cplx anchor, int k, int dim,
                                 const EdgeBundle& f, const QuadOpts& opts) {
  std::vector<cplx> sing = c.singular_points();
  cplx q = c.alpha[k] + 0.25 * c.min_gap * generic_dir;
  Polyline r = route_with_clearance(sing, 0.22 * c.min_gap, anchor, q);
  r.push_back(c.alpha[k]);
  return integrate_bundle(c, r, c.wtilde_canonical(anchor), dim, f, k, opts);
}

double BoutrouxResidual::max_abs() const {
  double m = std::abs(res_deviation);
  for (double v : re_pair) m = std::max(m, std::abs(v));
  return m;
}

BoutrouxResidual boutroux_residual(const Curve& c) {
  BoutrouxResidual br;
  br.res_deviation = infinity_residue(c) - 1.0;
  cplx anchor = default_anchor(c);
  EdgeBundle ydx = [&](cplx x, cplx wt, cplx* out) { out[0] = c.y_from_wtilde(x, wt); };
  cplx leg0 = integrate_to_branch(c, anchor, 0, 1, ydx).value[0];
  for (size_t k = 1; k < c.alpha.size(); ++k) {
    cplx legk = integrate_to_branch(c, anchor, (int)k, 1, ydx).value[0];
    br.re_pair.push_back((legk - leg0).real());
  }
  return br;
}

} // namespace btx
