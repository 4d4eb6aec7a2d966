#include "btx/trajectory.hpp"

#include "btx/errors.hpp"
#include "btx/periods.hpp"
#include "btx/quad.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace btx {

namespace {

constexpr double kpi = 3.14159265358979323846;
const cplx kJ(0.0, 1.0);
const double kinf = std::numeric_limits<double>::infinity();

double wrap_pi(double a) {
  a = std::fmod(a, 2 * kpi);
  if (a <= -kpi) a += 2 * kpi;
  if (a > kpi) a -= 2 * kpi;
  return a;
}

// Some local branch of wtilde. Only used to seed continuations whose final
// value is sign-normalized (|Im|, Im > 0) or whose sign cancels.
cplx wt_local(const Curve& c, cplx z) {
  cplx p = 1.0;
  for (cplx a : c.alpha) p *= (z - a);
  return std::sqrt(p);
}

EdgeBundle ydx_bundle(const Curve& c) {
  return [&c](cplx x, cplx wt, cplx* out) { out[0] = c.y_from_wtilde(x, wt); };
}

// 7-point Gauss-Legendre for int y dz along the chord z0 -> z1 with wtilde
// continued from (z0, w0). Steps are kept short relative to the distance to
// the nearest singular point, so the rule is exact to machine precision.
cplx gl7_ydz(const Curve& c, cplx z0, cplx w0, cplx z1) {
  static const double xs[7] = {0.025446043828620736, 0.12923440720030277,
                               0.2970774243113014,   0.5,
                               0.7029225756886986,   0.8707655927996972,
                               0.9745539561713793};
  static const double ws[7] = {0.06474248308443485, 0.13985269574463833,
                               0.19091502525255946, 0.20897959183673468,
                               0.19091502525255946, 0.13985269574463833,
                               0.06474248308443485};
  cplx dz = z1 - z0;
  if (dz == cplx(0.0)) return 0.0;
  cplx acc = 0.0;
  for (int i = 0; i < 7; ++i) {
    cplx z = z0 + xs[i] * dz;
    acc += ws[i] * c.y_from_wtilde(z, c.wtilde_step(z0, z, w0));
  }
  return acc * dz;
}

int ray_count(const GraphVertex& v) { return v.saddle ? 2 * v.mult + 2 : 3; }

// Leading local coefficient c0 of y ~ c0 (z - v)^q at a vertex (q = 1/2 at a
// branch point, q = mult at an M root). The branch ambiguity of c0 shifts the
// ray ladder by exactly one rung, so the sorted ray set is well defined.
cplx local_coeff(const Curve& c, const GraphVertex& v) {
  if (!v.saddle) {
    cplx p = 1.0;
    for (size_t j = 0; j < c.alpha.size(); ++j)
      if ((int)j != v.index) p *= (v.z - c.alpha[j]);
    return c.scale * c.M(v.z) * std::sqrt(p);
  }
  cplx m = 1.0;
  for (size_t j = 0; j < c.mroots.size(); ++j)
    if ((int)j != v.index)
      for (int k = 0; k < c.mroots[j].mult; ++k) m *= (v.z - c.mroots[j].root);
  return c.scale * m * wt_local(c, v.z);
}

// Departure angles of the level lines at a vertex, ascending in (-pi, pi].
std::vector<double> vertex_ray_angles(const Curve& c, const GraphVertex& v) {
  double psi = std::arg(local_coeff(c, v));
  double qp1 = v.saddle ? double(v.mult + 1) : 1.5;
  int n = ray_count(v);
  std::vector<double> out(n);
  for (int k = 0; k < n; ++k) out[k] = wrap_pi((kpi / 2 + k * kpi - psi) / qp1);
  std::sort(out.begin(), out.end());
  return out;
}

// One adaptive Dormand-Prince step of dz/dt = phase / y(z), wtilde continued
// from (z, w). dt carries the next proposal out; |dz| is capped by dzmax.
cplx rk_advance(const Curve& c, cplx z, cplx w, cplx phase, double& dt, double tol,
                double dzmax, double dz_floor) {
  static const double A3[] = {3.0 / 40, 9.0 / 40};
  static const double A4[] = {44.0 / 45, -56.0 / 15, 32.0 / 9};
  static const double A5[] = {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561,
                              -212.0 / 729};
  static const double A6[] = {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176,
                              -5103.0 / 18656};
  static const double B[] = {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784,
                             11.0 / 84};
  static const double E[] = {35.0 / 384 - 5179.0 / 57600,
                             0.0,
                             500.0 / 1113 - 7571.0 / 16695,
                             125.0 / 192 - 393.0 / 640,
                             -2187.0 / 6784 + 92097.0 / 339200,
                             11.0 / 84 - 187.0 / 2100,
                             -1.0 / 40};
  auto field = [&](cplx zs) -> cplx {
    cplx yv = c.y_from_wtilde(zs, c.wtilde_step(z, zs, w));
    if (!(std::abs(yv) > 0)) fail("StallDetected", "vanishing field on a trace step");
    return phase / yv;
  };
  cplx k1 = field(z);
  double spd = std::abs(k1);
  if (dt * spd > dzmax) dt = dzmax / spd;
  for (int rej = 0; rej < 80; ++rej) {
    if (dt * spd < dz_floor) fail("StallDetected", "trace step size underflow");
    bool ok = true;
    double err = 0.0;
    cplx ks[7];
    ks[0] = k1;
    cplx z5 = 0.0;
    try {
      ks[1] = field(z + dt * 0.2 * ks[0]);
      ks[2] = field(z + dt * (A3[0] * ks[0] + A3[1] * ks[1]));
      ks[3] = field(z + dt * (A4[0] * ks[0] + A4[1] * ks[1] + A4[2] * ks[2]));
      ks[4] = field(z + dt * (A5[0] * ks[0] + A5[1] * ks[1] + A5[2] * ks[2] +
                              A5[3] * ks[3]));
      ks[5] = field(z + dt * (A6[0] * ks[0] + A6[1] * ks[1] + A6[2] * ks[2] +
                              A6[3] * ks[3] + A6[4] * ks[4]));
      cplx inc = 0.0;
      for (int i = 0; i < 6; ++i) inc += B[i] * ks[i];
      z5 = z + dt * inc;
      ks[6] = field(z5);
      cplx ee = 0.0;
      for (int i = 0; i < 7; ++i) ee += E[i] * ks[i];
      err = std::abs(dt * ee);
    } catch (const Error&) {
      ok = false;
    }
    if (ok && err <= tol) {
      double fac = err > 0 ? 0.9 * std::pow(tol / err, 0.2) : 3.0;
      dt *= std::clamp(fac, 0.3, 3.0);
      return z5;
    }
    double fac = ok ? 0.9 * std::pow(tol / std::max(err, 1e-300), 0.2) : 0.3;
    dt *= std::clamp(fac, 0.1, 0.7);
  }
  fail("StallDetected", "trace step repeatedly rejected");
}

double seg_param(cplx a, cplx b, cplx p) {
  double n2 = std::norm(b - a);
  if (n2 == 0) return 0.0;
  return std::clamp(std::real(std::conj(b - a) * (p - a)) / n2, 0.0, 1.0);
}

// Segment parameter where |z0 + t (z1 - z0)| = R, assuming |z0| < R <= |z1|.
double circle_exit(cplx z0, cplx z1, double R) {
  cplx d = z1 - z0;
  double a = std::norm(d), b = 2 * std::real(std::conj(z0) * d), c0 = std::norm(z0) - R * R;
  double disc = std::max(0.0, b * b - 4 * a * c0);
  return std::clamp((-b + std::sqrt(disc)) / (2 * a), 0.0, 1.0);
}

// Point and unit tangent at the given arclength fraction of a polyline.
void polyline_sample(const Polyline& pts, double frac, cplx* q, cplx* tang) {
  double total = polyline_length(pts);
  double target = frac * total, acc = 0.0;
  for (size_t i = 1; i < pts.size(); ++i) {
    double L = std::abs(pts[i] - pts[i - 1]);
    if (acc + L >= target || i + 1 == pts.size()) {
      double t = L > 0 ? std::clamp((target - acc) / L, 0.0, 1.0) : 0.0;
      *q = pts[i - 1] + t * (pts[i] - pts[i - 1]);
      *tang = L > 0 ? (pts[i] - pts[i - 1]) / L : cplx(1.0);
      return;
    }
    acc += L;
  }
  *q = pts.back();
  *tang = 1.0;
}

// Straight anchor -> x path, with perpendicular midpoint jitter fallbacks for
// paths that hit a singular point.
std::vector<Polyline> anchor_paths(const HField& hf, cplx x) {
  std::vector<Polyline> out;
  out.push_back({hf.anchor, x});
  cplx d = x - hf.anchor;
  double L = std::abs(d);
  if (L > 0) {
    cplx u = d / L;
    for (int s : {1, -1, 2, -2, 3, -3, 4, -4})
      out.push_back({hf.anchor, hf.anchor + 0.5 * d + kJ * u * (0.07 * s * L), x});
  }
  return out;
}

int branch_index_at(const Curve& c, cplx x) {
  for (size_t j = 0; j < c.alpha.size(); ++j)
    if (x == c.alpha[j]) return (int)j;
  return -1;
}

} // namespace

std::vector<double> stokes_directions(const Curve& c) {
  int d = c.degree_vprime();
  double au = std::arg(2.0 * c.scale);
  std::vector<double> out;
  out.reserve(2 * d + 2);
  for (int k = 0; k < 2 * d + 2; ++k)
    out.push_back(wrap_pi((kpi / 2 + k * kpi - au) / (d + 1)));
  std::sort(out.begin(), out.end());
  return out;
}

HField make_h_field(const Curve& c, double boutroux_tol) {
  BoutrouxResidual res = boutroux_residual(c);
  require(res.max_abs() <= boutroux_tol, "NotBoutroux",
          "level function requires a Boutroux curve (residual " +
              std::to_string(res.max_abs()) + ")");
  HField hf;
  hf.anchor = std::polar(c.anchor_radius(), 0.2371);
  BundleResult leg = integrate_to_branch(c, hf.anchor, 0, 1, ydx_bundle(c));
  hf.base = -leg.value[0];
  return hf;
}

double h_eval(const Curve& c, const HField& hf, cplx x) {
  cplx w0 = c.wtilde_canonical(hf.anchor);
  int t2 = branch_index_at(c, x);
  for (const Polyline& path : anchor_paths(hf, x)) {
    try {
      BundleResult r = integrate_bundle(c, path, w0, 1, ydx_bundle(c), t2);
      return std::real(hf.base + r.value[0]);
    } catch (const Error& e) {
      if (e.code() != std::string("PathThroughSingularity")) throw;
    }
  }
  fail("PathThroughSingularity", "no clear evaluation path from the anchor");
}

std::vector<GraphVertex> graph_vertices(const Curve& c, const TraceOptions& opts) {
  HField hf = make_h_field(c, opts.boutroux_tol);
  std::vector<GraphVertex> verts;
  for (size_t j = 0; j < c.alpha.size(); ++j) {
    GraphVertex v;
    v.z = c.alpha[j];
    v.saddle = false;
    v.index = (int)j;
    v.mult = 1;
    v.abs_level = 0.0;
    verts.push_back(v);
  }
  for (size_t i = 0; i < c.mroots.size(); ++i) {
    GraphVertex v;
    v.z = c.mroots[i].root;
    v.saddle = true;
    v.index = (int)i;
    v.mult = c.mroots[i].mult;
    v.abs_level = std::abs(h_eval(c, hf, v.z));
    require(v.abs_level > opts.mroot_tol, "CriticalMRoot",
            "M root lies on the zero level of h");
    verts.push_back(v);
  }
  return verts;
}

TrajectoryArc trace_horizontal(const Curve& c, const std::vector<GraphVertex>& verts,
                               int vertex, int ray, const TraceOptions& opts) {
  const GraphVertex& src = verts.at(vertex);
  std::vector<double> rays = vertex_ray_angles(c, src);
  double th = rays.at(ray);
  EdgeBundle f = ydx_bundle(c);

  const double rcap = opts.capture_scale * c.min_gap;
  const double delta0 = 16 * rcap;
  const double Resc = c.escape_radius();
  const double rk_tol = opts.rk_tol * c.min_gap;
  const double dz_floor = 1e-14 * c.min_gap;
  const int t2src = src.saddle ? -1 : src.index;

  // Polish the launch angle so the level at the launch point matches the
  // vertex level to quadrature precision.
  cplx zi = src.z + std::polar(delta0, th);
  cplx wi = wt_local(c, zi);
  cplx F = 0.0, ylaunch = 0.0;
  auto launch_val = [&](double theta, cplx* yout) -> cplx {
    cplx zt = src.z + std::polar(delta0, theta);
    cplx wt = c.wtilde_step(zi, zt, wi);
    if (yout) *yout = c.y_from_wtilde(zt, wt);
    cplx I = integrate_bundle(c, {zt, src.z}, wt, 1, f, t2src).value[0];
    return -I; // int from the vertex out to zt
  };
  for (int it = 0; it < 30; ++it) {
    F = launch_val(th, &ylaunch);
    double dF = std::real(ylaunch * kJ * std::polar(delta0, th));
    if (std::abs(dF) < 1e-300) break;
    double step = std::clamp(-std::real(F) / dF, -0.4, 0.4);
    th += step;
    if (std::abs(step) < 1e-13) {
      F = launch_val(th, &ylaunch);
      break;
    }
  }
  require(std::abs(std::real(F)) <= 1e-9 * (1 + std::abs(F)), "StallDetected",
          "launch direction polish did not converge");

  TrajectoryArc arc;
  arc.v_from = vertex;
  arc.angle_from = wrap_pi(th);
  cplx z = src.z + std::polar(delta0, th);
  cplx w = c.wtilde_step(zi, z, wi);
  arc.pts = {src.z, z};
  double tlen = std::abs(F);
  double wre = std::real(F);
  double drift = std::abs(wre);

  cplx y0 = c.y_from_wtilde(z, w);
  int sgn = std::real(std::conj(std::polar(1.0, th)) * (kJ / y0)) > 0 ? 1 : -1;
  cplx phase = kJ * double(sgn);
  double dt = 0.1 * delta0 * std::abs(y0);
  bool left_src = false;

  for (int step = 0; step < opts.max_steps; ++step) {
    double dsing = kinf;
    for (const GraphVertex& v : verts) dsing = std::min(dsing, std::abs(z - v.z));
    double dzmax = std::min(0.12 * dsing, 0.12 * (1 + std::abs(z)));
    cplx z1 = rk_advance(c, z, w, phase, dt, rk_tol, dzmax, dz_floor);
    cplx dW = gl7_ydz(c, z, w, z1);
    double wre1 = wre + std::real(dW);
    drift = std::max(drift, std::abs(wre1));

    // capture: the step segment enters a vertex ball and the levels agree
    Seg sg{z, z1};
    for (size_t k = 0; k < verts.size(); ++k) {
      if ((int)k == vertex && !left_src) continue;
      const GraphVertex& tv = verts[k];
      if (seg_point_dist(sg, tv.z) >= rcap) continue;
      double tp = seg_param(z, z1, tv.z);
      cplx zn = z + tp * (z1 - z);
      cplx dWn = gl7_ydz(c, z, w, zn);
      cplx hop = 0.0;
      if (zn != tv.z) {
        cplx wn = c.wtilde_step(z, zn, w);
        int t2k = tv.saddle ? -1 : tv.index;
        hop = integrate_bundle(c, {zn, tv.z}, wn, 1, f, t2k).value[0];
      }
      double lvl = wre + std::real(dWn) + std::real(hop);
      double cap_tol = std::max(100 * opts.drift_tol * (1 + tlen), 1e-10);
      if (std::abs(lvl) < cap_tol) {
        arc.pts.push_back(zn);
        arc.pts.push_back(tv.z);
        arc.v_to = (int)k;
        arc.length = tlen + std::abs(dWn) + std::abs(hop);
        arc.drift_max = std::max(drift, std::abs(lvl));
        return arc;
      }
    }

    // project back onto the level set
    cplx w1 = c.wtilde_step(z, z1, w);
    cplx y1 = c.y_from_wtilde(z1, w1);
    cplx z1c = z1 - wre1 * std::conj(y1) / std::norm(y1);
    cplx dW2 = gl7_ydz(c, z1, w1, z1c);
    double wre2 = wre1 + std::real(dW2);
    require(std::abs(wre2) <= opts.drift_tol * (1 + tlen), "TraceTolExceeded",
            "level drift not correctable within tolerance");

    if (std::abs(z1c) >= Resc) {
      double te = circle_exit(z, z1c, Resc);
      arc.pts.push_back(z + te * (z1c - z));
      arc.length = kinf;
      arc.drift_max = drift;
      return arc;
    }

    arc.pts.push_back(z1c);
    tlen += std::abs(dW + dW2);
    w = c.wtilde_step(z, z1c, w);
    z = z1c;
    wre = wre2;
    if (!left_src && std::abs(z - src.z) > 4 * delta0) left_src = true;
  }
  fail("StallDetected", "trace exceeded max_steps");
}

CriticalGraph build_critical_graph(const Curve& c, const TraceOptions& opts) {
  CriticalGraph g;
  g.verts = graph_vertices(c, opts);
  g.escape_radius = c.escape_radius();
  g.dirs = stokes_directions(c);
  const double rcap = opts.capture_scale * c.min_gap;

  std::vector<TrajectoryArc> raw;
  for (size_t v = 0; v < g.verts.size(); ++v)
    for (int r = 0; r < ray_count(g.verts[v]); ++r)
      raw.push_back(trace_horizontal(c, g.verts, (int)v, r, opts));

  // merge the two traces of every closed arc (matched by geometry so parallel
  // arcs between the same vertex pair stay distinct)
  std::map<std::pair<int, int>, std::vector<int>> groups;
  for (size_t i = 0; i < raw.size(); ++i) {
    if (raw[i].v_to < 0) continue;
    require(raw[i].v_from != raw[i].v_to, "UnresolvedMerge",
            "trace returned to its own vertex");
    groups[{std::min(raw[i].v_from, raw[i].v_to), std::max(raw[i].v_from, raw[i].v_to)}]
        .push_back((int)i);
  }
  for (auto& [key, ids] : groups) {
    std::vector<int> fwd, bwd;
    for (int i : ids) (raw[i].v_from == key.first ? fwd : bwd).push_back(i);
    require(fwd.size() == bwd.size(), "UnresolvedMerge",
            "closed traces do not pair up across a vertex pair");
    std::vector<bool> used(bwd.size(), false);
    for (int i : fwd) {
      cplx mid = raw[i].pts[raw[i].pts.size() / 2];
      int best = -1;
      double bestd = kinf;
      for (size_t j = 0; j < bwd.size(); ++j) {
        if (used[j]) continue;
        double d = polyline_point_dist(raw[bwd[j]].pts, mid);
        if (d < bestd) {
          bestd = d;
          best = (int)j;
        }
      }
      require(best >= 0 && bestd <= 20 * rcap, "UnresolvedMerge",
              "no reverse trace matches a closed trajectory");
      used[best] = true;
      const TrajectoryArc& partner = raw[bwd[best]];
      TrajectoryArc merged = raw[i];
      merged.angle_to = partner.angle_from;
      merged.drift_max = std::max(merged.drift_max, partner.drift_max);
      require(std::abs(merged.length - partner.length) <= 1e-6 * (1 + merged.length),
              "UnresolvedMerge", "retraced lengths disagree");
      g.arcs.push_back(std::move(merged));
    }
  }
  for (auto& a : raw)
    if (a.v_to < 0) {
      int best = 0;
      double bd = kinf;
      double ang = std::arg(a.pts.back());
      for (size_t k = 0; k < g.dirs.size(); ++k) {
        double d = std::abs(wrap_pi(ang - g.dirs[k]));
        if (d < bd) {
          bd = d;
          best = (int)k;
        }
      }
      a.dir_to = best;
      g.arcs.push_back(std::move(a));
    }

  // closed arcs must form a forest
  std::vector<int> root(g.verts.size());
  for (size_t i = 0; i < root.size(); ++i) root[i] = (int)i;
  std::function<int(int)> find = [&](int x) {
    while (root[x] != x) x = root[x] = root[root[x]];
    return x;
  };
  for (const auto& a : g.arcs)
    if (a.v_to >= 0) {
      int ra = find(a.v_from), rb = find(a.v_to);
      require(ra != rb, "UnresolvedMerge", "closed trajectory arcs form a loop");
      root[ra] = rb;
    }

  // vertex incidence, CCW by departure angle
  for (size_t i = 0; i < g.arcs.size(); ++i) {
    const auto& a = g.arcs[i];
    g.verts[a.v_from].arcs.push_back((int)i);
    g.verts[a.v_from].open_count += a.v_to < 0 ? 1 : 0;
    g.verts[a.v_from].closed_count += a.v_to >= 0 ? 1 : 0;
    if (a.v_to >= 0) {
      g.verts[a.v_to].arcs.push_back((int)i);
      g.verts[a.v_to].closed_count += 1;
    }
  }
  for (size_t v = 0; v < g.verts.size(); ++v) {
    GraphVertex& gv = g.verts[v];
    auto dep = [&](int aid) {
      const auto& a = g.arcs[aid];
      return a.v_from == (int)v ? a.angle_from : a.angle_to;
    };
    std::sort(gv.arcs.begin(), gv.arcs.end(),
              [&](int x, int y) { return dep(x) < dep(y); });
    require((int)gv.arcs.size() == ray_count(gv), "UnresolvedMerge",
            "vertex incidence does not match its ray count");
    gv.type = gv.saddle ? 0 : gv.open_count + 1;
  }
  return g;
}

double h_eval(const Curve& c, const HField& hf, const CriticalGraph& g,
              const std::vector<int>& cut_arcs, cplx x, std::optional<SideHint> hint) {
  const double rcap = 1e-4 * c.min_gap;
  cplx xe = x;
  if (hint && hint->cut_arc >= 0) {
    const Polyline& pts = g.arcs.at(hint->cut_arc).pts;
    double bd = kinf;
    cplx tang = 1.0;
    for (size_t i = 1; i < pts.size(); ++i) {
      double d = seg_point_dist({pts[i - 1], pts[i]}, x);
      if (d < bd && pts[i] != pts[i - 1]) {
        bd = d;
        tang = (pts[i] - pts[i - 1]) / std::abs(pts[i] - pts[i - 1]);
      }
    }
    xe = x + double(hint->side >= 0 ? 1 : -1) * kJ * tang * (1e-6 * c.min_gap);
  } else {
    for (int id : cut_arcs)
      require(polyline_point_dist(g.arcs.at(id).pts, x) > 1e-7 * c.min_gap,
              "OnCutWithoutHint", "evaluation point lies on a cut arc");
  }

  cplx w0 = c.wtilde_canonical(hf.anchor);
  int t2 = branch_index_at(c, xe);
  for (const Polyline& path : anchor_paths(hf, xe)) {
    cplx val;
    try {
      val = hf.base + integrate_bundle(c, path, w0, 1, ydx_bundle(c), t2).value[0];
    } catch (const Error& e) {
      if (e.code() != std::string("PathThroughSingularity")) throw;
      continue;
    }
    // crossing parity against the cut arcs; cuts lie in the zero level set,
    // so each crossing flips the sign of the continued branch
    bool ambiguous = false;
    int crossings = 0;
    for (int id : cut_arcs) {
      const Polyline& ap = g.arcs.at(id).pts;
      std::vector<cplx> hits;
      for (size_t i = 1; i < path.size() && !ambiguous; ++i) {
        Seg ps{path[i - 1], path[i]};
        for (size_t j = 1; j + 0 < ap.size(); ++j) {
          double t, u;
          if (!seg_seg_cross(ps, {ap[j - 1], ap[j]}, &t, &u)) continue;
          cplx cp = path[i - 1] + t * (path[i] - path[i - 1]);
          for (const GraphVertex& v : g.verts)
            if (std::abs(cp - v.z) < 3 * rcap) ambiguous = true;
          hits.push_back(cp);
        }
      }
      // a crossing at a polyline joint registers on both adjacent segments
      std::sort(hits.begin(), hits.end(), [](cplx a, cplx b) {
        return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
      });
      for (size_t i = 0; i < hits.size(); ++i)
        if (i == 0 || std::abs(hits[i] - hits[i - 1]) > 1e-7 * c.min_gap) ++crossings;
    }
    if (ambiguous) continue;
    double hv = std::real(val);
    return crossings % 2 == 0 ? hv : -hv;
  }
  fail("PathThroughSingularity", "no parity-safe evaluation path from the anchor");
}

AdmissibilityReport admissibility_check(const Curve& c, const CriticalGraph& g,
                                        const std::vector<int>& cut_arcs,
                                        const TraceOptions& opts) {
  AdmissibilityReport rep;
  BoutrouxResidual res = boutroux_residual(c);
  rep.residual = res.max_abs();
  rep.boutroux_ok = rep.residual <= opts.boutroux_tol;

  rep.min_mroot_level = kinf;
  rep.mroots_ok = true;
  for (const GraphVertex& v : g.verts)
    if (v.saddle) {
      rep.min_mroot_level = std::min(rep.min_mroot_level, v.abs_level);
      if (v.abs_level <= opts.mroot_tol) rep.mroots_ok = false;
    }

  if (!rep.boutroux_ok) {
    rep.cuts_negative = false;
    rep.admissible = false;
    return rep;
  }

  HField hf = make_h_field(c, opts.boutroux_tol);
  const double off = 1e-3 * c.min_gap;
  rep.worst_side_h = -kinf;
  rep.cuts_negative = true;
  for (int id : cut_arcs) {
    const TrajectoryArc& a = g.arcs.at(id);
    require(a.v_to >= 0, "TopologyMismatch", "cut arcs must be closed trajectory arcs");
    double worst = -kinf;
    for (double frac : {0.12, 0.31, 0.5, 0.69, 0.88}) {
      cplx q, tang;
      polyline_sample(a.pts, frac, &q, &tang);
      for (int side : {1, -1}) {
        double hv = h_eval(c, hf, g, cut_arcs, q + double(side) * kJ * tang * off);
        worst = std::max(worst, hv);
        rep.worst_side_h = std::max(rep.worst_side_h, hv);
      }
    }
    rep.edge_margin.push_back(-worst);
    if (!(worst < 0)) rep.cuts_negative = false;
  }
  rep.admissible = rep.boutroux_ok && rep.cuts_negative && rep.mroots_ok;
  return rep;
}

namespace {

// Vertical (steepest ascent/descent) trace from a point on a face rim until
// it crosses another arc of the critical graph.
struct VertHit {
  Polyline pts;
  int arc = -1;
  cplx cpt = 0;
};

VertHit trace_vertical(const Curve& c, const CriticalGraph& g,
                       const std::vector<std::pair<Seg, int>>& soup, cplx p0, cplx w0,
                       int sigma, const TraceOptions& opts) {
  const double rk_tol = opts.rk_tol * c.min_gap;
  const double dz_floor = 1e-14 * c.min_gap;
  const double excl = 0.02 * c.min_gap;
  VertHit out;
  out.pts = {p0};
  cplx z = p0, w = w0;
  cplx phase = double(sigma);
  cplx y0 = c.y_from_wtilde(p0, w0);
  double dt = 0.02 * c.min_gap * std::abs(y0);
  for (int step = 0; step < opts.max_steps; ++step) {
    double dsing = kinf;
    for (const GraphVertex& v : g.verts) dsing = std::min(dsing, std::abs(z - v.z));
    double dzmax = std::min(0.12 * dsing, 0.12 * (1 + std::abs(z)));
    cplx z1 = rk_advance(c, z, w, phase, dt, rk_tol, dzmax, dz_floor);
    Seg sg{z, z1};
    double bt = kinf;
    for (const auto& [s, id] : soup) {
      double t, u;
      if (!seg_seg_cross(sg, s, &t, &u)) continue;
      cplx cp = z + t * (z1 - z);
      if (std::abs(cp - p0) < excl) continue;
      if (t < bt) {
        bt = t;
        out.arc = id;
        out.cpt = cp;
      }
    }
    if (out.arc >= 0) {
      out.pts.push_back(out.cpt);
      return out;
    }
    require(std::abs(z1) < 1.2 * c.escape_radius(), "FaceClassificationFailure",
            "vertical trace escaped without hitting the opposite rim");
    out.pts.push_back(z1);
    w = c.wtilde_step(z, z1, w);
    z = z1;
  }
  fail("StallDetected", "vertical trace exceeded max_steps");
}

// Exact int y dx from the interior sample index into the arc's from-vertex.
cplx piece_into_from_vertex(const Curve& c, const CriticalGraph& g,
                            const TrajectoryArc& a, const Polyline& head, cplx w0) {
  const GraphVertex& v = g.verts[a.v_from];
  int t2 = v.saddle ? -1 : v.index;
  return integrate_bundle(c, head, w0, 1, ydx_bundle(c), t2).value[0];
}

} // namespace

ClockDiagram clock_extract(const Curve& c, const CriticalGraph& g,
                           const TraceOptions& opts) {
  ClockDiagram d;
  d.n = 2 * c.degree_vprime();
  d.ndirs = d.n + 2;
  d.dirs = g.dirs;
  require((int)g.dirs.size() == d.ndirs, "FaceClassificationFailure",
          "direction count does not match the polygon degree");
  const int V = (int)g.verts.size();
  const int E = (int)g.arcs.size();
  EdgeBundle f = ydx_bundle(c);

  // ring of open ends at infinity, CCW by escape angle
  struct End {
    int arc;
    double ang;
  };
  std::vector<End> ends;
  std::vector<int> slot_of(g.arcs.size(), -1);
  for (size_t i = 0; i < g.arcs.size(); ++i)
    if (g.arcs[i].v_to < 0) ends.push_back({(int)i, std::arg(g.arcs[i].pts.back())});
  std::sort(ends.begin(), ends.end(), [](const End& a, const End& b) { return a.ang < b.ang; });
  for (size_t s = 0; s < ends.size(); ++s) slot_of[ends[s].arc] = (int)s;
  require(!ends.empty(), "FaceClassificationFailure", "graph has no open arcs");

  // rotation-system face walk; half-edge 2a = forward (from v_from),
  // 2a+1 = backward (from v_to, or inbound from infinity for open arcs)
  auto next_at_vertex = [&](int vid, int aid) -> std::pair<int, int> {
    const GraphVertex& gv = g.verts[vid];
    int pos = -1;
    for (size_t i = 0; i < gv.arcs.size(); ++i)
      if (gv.arcs[i] == aid) pos = (int)i;
    require(pos >= 0, "FaceClassificationFailure", "arc missing from vertex rotation");
    int nxt = gv.arcs[(pos + (int)gv.arcs.size() - 1) % gv.arcs.size()];
    int dir = g.arcs[nxt].v_from == vid ? 1 : -1;
    return {nxt, dir};
  };

  std::vector<char> seen(2 * g.arcs.size(), 0);
  std::vector<int> sides_seen;
  d.S = d.P = 0;
  for (size_t start = 0; start < 2 * g.arcs.size(); ++start) {
    if (seen[start]) continue;
    ClockFace face;
    int passages = 0;
    size_t he = start;
    do {
      seen[he] = 1;
      int aid = (int)(he / 2);
      int dir = he % 2 == 0 ? 1 : -1;
      face.boundary.push_back({aid, dir});
      const TrajectoryArc& a = g.arcs[aid];
      if (dir == 1 && a.v_to < 0) {
        // departs to infinity: cross the gap CCW to the next slot
        int s = slot_of[aid];
        int s2 = (s + 1) % (int)ends.size();
        int k1 = g.arcs[ends[s].arc].dir_to;
        int k2 = g.arcs[ends[s2].arc].dir_to;
        int dk = ((k2 - k1) % d.ndirs + d.ndirs) % d.ndirs;
        ++passages;
        if (dk == 1)
          face.sides.push_back(k1);
        else
          require(dk == 0, "FaceClassificationFailure",
                  "adjacent escape directions skip a polygon side");
        he = 2 * (size_t)ends[s2].arc + 1;
      } else {
        int vid = dir == 1 ? a.v_to : a.v_from;
        auto [nxt, ndir] = next_at_vertex(vid, aid);
        he = 2 * (size_t)nxt + (ndir == 1 ? 0 : 1);
      }
    } while (he != start);

    require(passages > 0, "FaceClassificationFailure",
            "bounded face in the trajectory complement");
    if (passages == 1 && face.sides.size() == 1) {
      face.strip = false;
      ++d.P;
    } else if (passages == 2 && face.sides.empty()) {
      face.strip = true;
      ++d.S;
    } else {
      fail("FaceClassificationFailure", "face is neither a half plane nor a strip");
    }
    for (int s : face.sides) sides_seen.push_back(s);
    d.faces.push_back(std::move(face));
  }

  // structural identities of an admissible clock
  std::sort(sides_seen.begin(), sides_seen.end());
  bool sides_ok = (int)sides_seen.size() == d.ndirs;
  for (int i = 0; i < (int)sides_seen.size() && sides_ok; ++i)
    if (sides_seen[i] != i) sides_ok = false;
  require(sides_ok, "FaceClassificationFailure", "polygon sides not covered exactly once");
  require(d.P == d.ndirs, "FaceClassificationFailure",
          "half plane count differs from the direction count");
  int sum_open = 0, sum_closed = 0;
  for (const auto& v : g.verts) {
    sum_open += v.open_count;
    sum_closed += v.closed_count;
  }
  require(2 * d.S + d.P == sum_open, "FaceClassificationFailure",
          "open end count does not balance the faces");
  require(d.S == V - 1 - sum_closed / 2, "FaceClassificationFailure",
          "strip count violates the vertex-edge identity");
  require((int)d.faces.size() == 1 + E - V, "FaceClassificationFailure",
          "face count violates the Euler identity");

  // exact closed-arc lengths: requadrature of the traced homotopy class,
  // split at an interior sample and regularized into both endpoints
  d.ell.assign(g.arcs.size(), kinf);
  for (size_t i = 0; i < g.arcs.size(); ++i) {
    const TrajectoryArc& a = g.arcs[i];
    if (a.v_to < 0) continue;
    size_t m = std::clamp(a.pts.size() / 2, size_t(1), a.pts.size() - 2);
    cplx zm = a.pts[m];
    cplx wm = wt_local(c, zm);
    Polyline headA(a.pts.rend() - (m + 1), a.pts.rend());
    Polyline headB(a.pts.begin() + m, a.pts.end());
    cplx IA = piece_into_from_vertex(c, g, a, headA, wm);
    const GraphVertex& vt = g.verts[a.v_to];
    cplx IB = integrate_bundle(c, headB, wm, 1, f, vt.saddle ? -1 : vt.index).value[0];
    cplx full = IB - IA;
    double L = std::abs(std::imag(full));
    require(std::abs(std::real(full)) <= 1e-7 * (1 + L), "TraceTolExceeded",
            "closed arc is not on a single level");
    d.ell[i] = L;
  }

  // strip moduli via a vertical crossing between the two rims
  std::vector<std::pair<Seg, int>> soup;
  for (size_t i = 0; i < g.arcs.size(); ++i)
    for (size_t j = 1; j < g.arcs[i].pts.size(); ++j)
      soup.push_back({{g.arcs[i].pts[j - 1], g.arcs[i].pts[j]}, (int)i});
  for (ClockFace& face : d.faces) {
    if (!face.strip) continue;
    bool done = false;
    for (auto [aid, fdir] : face.boundary) {
      const TrajectoryArc& a = g.arcs[aid];
      // interior sample: away from the endpoint vertices, close to the action
      double pref = kinf;
      int pick = -1;
      double acc = 0.0;
      std::vector<double> cum(a.pts.size(), 0.0);
      for (size_t i = 1; i < a.pts.size(); ++i) {
        acc += std::abs(a.pts[i] - a.pts[i - 1]);
        cum[i] = acc;
      }
      for (size_t i = 1; i + 1 < a.pts.size(); ++i) {
        if (cum[i] < 0.1 * c.min_gap) continue;
        if (a.v_to >= 0 && acc - cum[i] < 0.1 * c.min_gap) continue;
        if (std::abs(a.pts[i]) > 0.5 * c.escape_radius()) continue;
        if (std::abs(a.pts[i]) < pref) {
          pref = std::abs(a.pts[i]);
          pick = (int)i;
        }
      }
      if (pick < 0) continue;
      cplx p0 = a.pts[pick];
      cplx tang = a.pts[pick + 1] - a.pts[pick];
      tang *= double(fdir) / std::abs(tang);
      cplx wp = wt_local(c, p0);
      cplx yp = c.y_from_wtilde(p0, wp);
      int sigma = std::real(std::conj(kJ * tang) * (1.0 / yp)) > 0 ? 1 : -1;
      VertHit hit = trace_vertical(c, g, soup, p0, wp, sigma, opts);
      bool on_face = false;
      for (auto [bid, bdir] : face.boundary)
        if (bid == hit.arc) on_face = true;
      require(on_face, "FaceClassificationFailure",
              "vertical trace left its strip before hitting a rim");

      const TrajectoryArc& b = g.arcs[hit.arc];
      // composite path from a's from-vertex through p0 and the crossing point
      // to b's from-vertex, requadratured exactly
      Polyline head1(a.pts.rend() - (pick + 1), a.pts.rend());
      cplx I1 = piece_into_from_vertex(c, g, a, head1, wp);
      BundleResult I2 = integrate_bundle(c, hit.pts, wp, 1, f);
      // locate the crossing segment on b and walk back to its from-vertex
      size_t bj = 1;
      double bd = kinf;
      for (size_t j = 1; j < b.pts.size(); ++j) {
        double dd = seg_point_dist({b.pts[j - 1], b.pts[j]}, hit.cpt);
        if (dd < bd) {
          bd = dd;
          bj = j;
        }
      }
      Polyline head3;
      head3.push_back(hit.cpt);
      for (size_t j = bj; j-- > 0;) head3.push_back(b.pts[j]);
      cplx I3 = piece_into_from_vertex(c, g, b, head3, I2.w_end);
      cplx rho = kJ * (-I1 + I2.value[0] + I3);
      if (rho.imag() < 0) rho = -rho;
      require(rho.imag() > 1e-9 * (1 + std::abs(rho)), "FaceClassificationFailure",
              "degenerate strip modulus");
      face.rho = rho;
      done = true;
      break;
    }
    require(done, "FaceClassificationFailure", "no usable rim sample for a strip");
  }

  d.valency.resize(V);
  d.open_cnt.resize(V);
  d.closed_cnt.resize(V);
  for (int v = 0; v < V; ++v) {
    d.valency[v] = (int)g.verts[v].arcs.size();
    d.open_cnt[v] = g.verts[v].open_count;
    d.closed_cnt[v] = g.verts[v].closed_count;
  }
  return d;
}

} // namespace btx
