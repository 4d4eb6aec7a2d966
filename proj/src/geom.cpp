#include "btx/geom.hpp"
#include "btx/errors.hpp"
#include <algorithm>
#include <map>
#include <cmath>

namespace btx {

double seg_point_dist(const Seg& s, cplx p) {
  cplx d = s.b - s.a;
  double L2 = std::norm(d);
  if (L2 == 0) return std::abs(p - s.a);
  double t = std::clamp(((p - s.a) * std::conj(d)).real() / L2, 0.0, 1.0);
  return std::abs(p - (s.a + t * d));
}

static double cross2(cplx a, cplx b) { return a.real() * b.imag() - a.imag() * b.real(); }

bool seg_seg_cross(const Seg& s1, const Seg& s2, double* t, double* u) {
  cplx d1 = s1.b - s1.a, d2 = s2.b - s2.a;
  double den = cross2(d1, d2);
  if (den == 0) return false;
  double tt = cross2(s2.a - s1.a, d2) / den;
  double uu = cross2(s2.a - s1.a, d1) / den;
  if (tt < 0 || tt > 1 || uu < 0 || uu > 1) return false;
  if (t) *t = tt;
  if (u) *u = uu;
  return true;
}

double seg_seg_dist(const Seg& s1, const Seg& s2) {
  if (seg_seg_cross(s1, s2)) return 0.0;
  return std::min(std::min(seg_point_dist(s1, s2.a), seg_point_dist(s1, s2.b)),
                  std::min(seg_point_dist(s2, s1.a), seg_point_dist(s2, s1.b)));
}

double polyline_length(const Polyline& p) {
  double L = 0;
  for (size_t i = 1; i < p.size(); ++i) L += std::abs(p[i] - p[i - 1]);
  return L;
}

double polyline_point_dist(const Polyline& p, cplx z) {
  double d = 1e300;
  if (p.size() == 1) return std::abs(z - p[0]);
  for (size_t i = 1; i < p.size(); ++i) d = std::min(d, seg_point_dist({p[i - 1], p[i]}, z));
  return d;
}

int winding_number(const Polyline& loop, cplx z) {
  double total = 0;
  size_t n = loop.size();
  for (size_t i = 0; i < n; ++i) {
    cplx a = loop[i] - z, b = loop[(i + 1) % n] - z;
    total += std::arg(b / a);
  }
  return (int)std::lround(total / (2 * pi));
}

double signed_area(const Polyline& loop) {
  double A = 0;
  size_t n = loop.size();
  for (size_t i = 0; i < n; ++i) {
    cplx a = loop[i], b = loop[(i + 1) % n];
    A += cross2(a, b);
  }
  return 0.5 * A;
}

static void dp_rec(const Polyline& p, size_t i, size_t j, double eps,
                   std::vector<char>& keep) {
  if (j <= i + 1) return;
  Seg s{p[i], p[j]};
  double dmax = -1;
  size_t imax = i;
  for (size_t k = i + 1; k < j; ++k) {
    double d = seg_point_dist(s, p[k]);
    if (d > dmax) { dmax = d; imax = k; }
  }
  if (dmax > eps) {
    keep[imax] = 1;
    dp_rec(p, i, imax, eps, keep);
    dp_rec(p, imax, j, eps, keep);
  }
}

Polyline simplify_polyline(const Polyline& p, double eps) {
  if (p.size() <= 2) return p;
  std::vector<char> keep(p.size(), 0);
  keep.front() = keep.back() = 1;
  dp_rec(p, 0, p.size() - 1, eps, keep);
  Polyline out;
  for (size_t i = 0; i < p.size(); ++i)
    if (keep[i]) out.push_back(p[i]);
  return out;
}

void SegGrid::build(std::vector<Seg> segs, double cell) {
  segs_ = std::move(segs);
  cell_ = cell;
  if (segs_.empty()) return;
  double x1 = 1e300, y1 = 1e300, x2 = -1e300, y2 = -1e300;
  for (auto& s : segs_) {
    x1 = std::min({x1, s.a.real(), s.b.real()});
    y1 = std::min({y1, s.a.imag(), s.b.imag()});
    x2 = std::max({x2, s.a.real(), s.b.real()});
    y2 = std::max({y2, s.a.imag(), s.b.imag()});
  }
  x0_ = x1 - cell_;
  y0_ = y1 - cell_;
  nx_ = std::max(1, (int)std::ceil((x2 - x0_) / cell_) + 1);
  ny_ = std::max(1, (int)std::ceil((y2 - y0_) / cell_) + 1);
  // cap memory for degenerate extents
  while ((long)nx_ * ny_ > 4'000'000) {
    cell_ *= 2;
    nx_ = std::max(1, (int)std::ceil((x2 - x0_) / cell_) + 1);
    ny_ = std::max(1, (int)std::ceil((y2 - y0_) / cell_) + 1);
  }
  bins_.assign((size_t)nx_ * ny_, {});
  for (int k = 0; k < (int)segs_.size(); ++k) {
    const Seg& s = segs_[k];
    int cx1 = std::clamp((int)((std::min(s.a.real(), s.b.real()) - x0_) / cell_), 0, nx_ - 1);
    int cx2 = std::clamp((int)((std::max(s.a.real(), s.b.real()) - x0_) / cell_), 0, nx_ - 1);
    int cy1 = std::clamp((int)((std::min(s.a.imag(), s.b.imag()) - y0_) / cell_), 0, ny_ - 1);
    int cy2 = std::clamp((int)((std::max(s.a.imag(), s.b.imag()) - y0_) / cell_), 0, ny_ - 1);
    for (int cy = cy1; cy <= cy2; ++cy)
      for (int cx = cx1; cx <= cx2; ++cx)
        bins_[(size_t)cy * nx_ + cx].push_back(k);
  }
}

void SegGrid::cells_near(const Seg& q, double r, std::vector<int>& out) const {
  out.clear();
  if (segs_.empty()) return;
  int cx1 = std::clamp((int)((std::min(q.a.real(), q.b.real()) - r - x0_) / cell_), 0, nx_ - 1);
  int cx2 = std::clamp((int)((std::max(q.a.real(), q.b.real()) + r - x0_) / cell_), 0, nx_ - 1);
  int cy1 = std::clamp((int)((std::min(q.a.imag(), q.b.imag()) - r - y0_) / cell_), 0, ny_ - 1);
  int cy2 = std::clamp((int)((std::max(q.a.imag(), q.b.imag()) + r - y0_) / cell_), 0, ny_ - 1);
  for (int cy = cy1; cy <= cy2; ++cy)
    for (int cx = cx1; cx <= cx2; ++cx)
      for (int k : bins_[(size_t)cy * nx_ + cx]) out.push_back(k);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
}

bool SegGrid::clear(const Seg& q, double r) const {
  if (segs_.empty()) return true;
  std::vector<int> cand;
  cells_near(q, r, cand);
  for (int k : cand)
    if (seg_seg_dist(q, segs_[k]) <= r) return false;
  return true;
}

bool SegGrid::crosses(const Seg& q) const {
  if (segs_.empty()) return false;
  std::vector<int> cand;
  cells_near(q, 0.0, cand);
  for (int k : cand)
    if (seg_seg_cross(q, segs_[k])) return true;
  return false;
}

double SegGrid::min_dist(const Seg& q, double cutoff) const {
  if (segs_.empty()) return cutoff;
  std::vector<int> cand;
  cells_near(q, cutoff > 1e100 ? 8 * cell_ : cutoff, cand);
  double d = cutoff;
  if (cand.empty() || cutoff > 1e100) {
    // fall back to full scan for unbounded queries
    for (auto& s : segs_) d = std::min(d, seg_seg_dist(q, s));
    return d;
  }
  for (int k : cand) d = std::min(d, seg_seg_dist(q, segs_[k]));
  return d;
}

// ---- marching squares offset boundary ----

std::vector<Polyline> offset_region_boundary(const Polyline& chain, double rho, int grid_n) {
  require(chain.size() >= 1 && rho > 0, "BadOffsetInput", "empty chain or nonpositive rho");
  double x1 = 1e300, y1 = 1e300, x2 = -1e300, y2 = -1e300;
  for (cplx p : chain) {
    x1 = std::min(x1, p.real());
    y1 = std::min(y1, p.imag());
    x2 = std::max(x2, p.real());
    y2 = std::max(y2, p.imag());
  }
  double pad = 1.8 * rho;
  x1 -= pad; y1 -= pad; x2 += pad; y2 += pad;
  int n = grid_n;
  double hx = (x2 - x1) / n, hy = (y2 - y1) / n;
  // field F > 0 inside the region
  std::vector<double> F((size_t)(n + 1) * (n + 1));
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) {
      cplx p(x1 + i * hx, y1 + j * hy);
      F[(size_t)j * (n + 1) + i] = rho - polyline_point_dist(chain, p);
    }
  auto fat = [&](int i, int j) { return F[(size_t)j * (n + 1) + i]; };
  auto corner = [&](int i, int j) { return cplx(x1 + i * hx, y1 + j * hy); };

  // Directed contour edges: region (F>0) kept on the LEFT.
  // Key for a crossing point: edge encoded as (corner i, j, horizontal?).
  struct Key {
    int i, j, horiz;
    bool operator<(const Key& o) const {
      return std::tie(i, j, horiz) < std::tie(o.i, o.j, o.horiz);
    }
  };
  auto lerp_pt = [&](int i, int j, bool horiz) {
    double f0 = fat(i, j), f1 = horiz ? fat(i + 1, j) : fat(i, j + 1);
    double t = f0 / (f0 - f1);
    t = std::clamp(t, 1e-6, 1.0 - 1e-6);
    return horiz ? corner(i, j) + cplx(t * hx, 0) : corner(i, j) + cplx(0, t * hy);
  };
  std::map<Key, std::pair<Key, cplx>> next; // from-key -> (to-key, from-point)
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      // corners: 0=(i,j) 1=(i+1,j) 2=(i+1,j+1) 3=(i,j+1)
      double f0 = fat(i, j), f1 = fat(i + 1, j), f2 = fat(i + 1, j + 1), f3 = fat(i, j + 1);
      int code = (f0 > 0 ? 1 : 0) | (f1 > 0 ? 2 : 0) | (f2 > 0 ? 4 : 0) | (f3 > 0 ? 8 : 0);
      if (code == 0 || code == 15) continue;
      Key bottom{i, j, 1}, top{i, j + 1, 1}, left{i, j, 0}, right{i + 1, j, 0};
      auto add = [&](Key from, Key to) { next[from] = {to, lerp_pt(from.i, from.j, from.horiz)}; };
      // region (F>0) kept on the left of each directed piece
      switch (code) {
        case 1:  add(bottom, left); break;          // inside: c0
        case 2:  add(right, bottom); break;         // c1
        case 4:  add(top, right); break;            // c2
        case 8:  add(left, top); break;             // c3
        case 3:  add(right, left); break;           // c0 c1
        case 6:  add(top, bottom); break;           // c1 c2
        case 12: add(left, right); break;           // c2 c3
        case 9:  add(bottom, top); break;           // c3 c0
        case 7:  add(top, left); break;             // c0 c1 c2
        case 14: add(left, bottom); break;          // c1 c2 c3
        case 13: add(bottom, right); break;         // c2 c3 c0
        case 11: add(right, top); break;            // c3 c0 c1
        case 5: {                                   // saddle c0,c2
          double fc = 0.25 * (f0 + f1 + f2 + f3);
          if (fc > 0) { add(bottom, right); add(top, left); }
          else { add(bottom, left); add(top, right); }
          break;
        }
        case 10: {                                  // saddle c1,c3
          double fc = 0.25 * (f0 + f1 + f2 + f3);
          if (fc > 0) { add(left, bottom); add(right, top); }
          else { add(right, bottom); add(left, top); }
          break;
        }
      }
    }
  std::vector<Polyline> loops;
  while (!next.empty()) {
    auto it = next.begin();
    Key start = it->first, cur = start;
    Polyline loop;
    while (true) {
      auto jt = next.find(cur);
      if (jt == next.end()) break; // broken chain; drop partial loop
      loop.push_back(jt->second.second);
      Key nxt = jt->second.first;
      next.erase(jt);
      cur = nxt;
      if (cur.i == start.i && cur.j == start.j && cur.horiz == start.horiz) break;
    }
    if (loop.size() >= 3) {
      // simplify, then enforce clearance from the chain
      Polyline closed = loop;
      closed.push_back(loop.front());
      Polyline simp = simplify_polyline(closed, 0.08 * rho);
      simp.pop_back();
      bool ok = true;
      for (cplx p : simp)
        if (polyline_point_dist(chain, p) < 0.45 * rho) { ok = false; break; }
      loops.push_back(ok ? simp : loop);
    }
  }
  return loops;
}

} // namespace btx
