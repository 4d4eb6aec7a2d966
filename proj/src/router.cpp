#include "btx/router.hpp"
#include "btx/errors.hpp"
#include <algorithm>
#include <queue>
#include <cmath>

namespace btx {

namespace {
double ang_dist(double a, double b) {
  double d = std::fmod(std::abs(a - b), 2 * pi);
  return std::min(d, 2 * pi - d);
}
} // namespace

Scene::Scene(std::vector<Seg> obstacles, std::vector<cplx> singular, double clearance)
    : obstacles_(std::move(obstacles)), singular_(std::move(singular)),
      clearance_(clearance) {}

void Scene::set_ray(cplx base, double angle) {
  has_ray_ = true;
  ray_base_ = base;
  ray_angle_ = angle;
}

void Scene::finalize() {
  extent_ = 0.5;
  for (auto& s : obstacles_)
    extent_ = std::max({extent_, std::abs(s.a), std::abs(s.b)});
  for (cplx p : singular_) extent_ = std::max(extent_, std::abs(p));
  if (has_ray_) extent_ = std::max(extent_, std::abs(ray_base_));
  ring_ = extent_ + std::max({0.35 * extent_, 4 * clearance_, 0.5});
  box_ = ring_ + std::max(0.15 * ring_, 0.3);
  if (has_ray_) {
    // truncate the ray just beyond the routing box; far-field arcs handle the rest
    cplx dir = std::exp(iu * ray_angle_);
    obstacles_.push_back({ray_base_, ray_base_ + 3.5 * box_ * dir});
  }
  grid_.build(obstacles_, std::max(0.05 * std::max(extent_, 1.0), 2 * clearance_));
  cell_ = 2 * box_ / nc_;
  blocked_.assign((size_t)nc_ * nc_, 0);
  double rb_obs = 0.8 * cell_; // guarantees lattice moves cannot cross obstacles
  double rb_sing = std::max(clearance_, 0.8 * cell_);
  for (int iy = 0; iy < nc_; ++iy)
    for (int ix = 0; ix < nc_; ++ix) {
      cplx c = cell_center(ix, iy);
      if (!grid_.empty() && grid_.min_dist({c, c}, 4 * cell_) <= rb_obs) {
        blocked_[(size_t)iy * nc_ + ix] = 1;
        continue;
      }
      for (cplx p : singular_)
        if (std::abs(c - p) <= rb_sing) { blocked_[(size_t)iy * nc_ + ix] = 1; break; }
    }
  finalized_ = true;
}

cplx Scene::cell_center(int ix, int iy) const {
  return cplx(-box_ + (ix + 0.5) * cell_, -box_ + (iy + 0.5) * cell_);
}

bool Scene::cell_blocked(int ix, int iy) const {
  if (ix < 0 || iy < 0 || ix >= nc_ || iy >= nc_) return true;
  return blocked_[(size_t)iy * nc_ + ix] != 0;
}

double Scene::point_min_dist(cplx p) const {
  double d = 1e300;
  if (!grid_.empty()) d = grid_.min_dist({p, p}, 1e300);
  for (cplx s : singular_) d = std::min(d, std::abs(p - s));
  return d;
}

bool Scene::seg_no_cross(cplx a, cplx b) const {
  if (grid_.empty()) return true;
  return !grid_.crosses({a, b});
}

// segment acceptable as a route piece: crosses nothing, keeps singular points
// at a safe distance (cut proximity is harmless for continued integrands)
bool Scene::seg_ok(cplx a, cplx b, double soft_factor) const {
  if (!seg_no_cross(a, b)) return false;
  double soft = soft_factor * 0.45 * clearance_;
  for (cplx p : singular_)
    if (seg_point_dist({a, b}, p) <= soft) return false;
  return true;
}

int Scene::find_hop_cell(cplx p) const {
  int ix = std::clamp((int)((p.real() + box_) / cell_), 0, nc_ - 1);
  int iy = std::clamp((int)((p.imag() + box_) / cell_), 0, nc_ - 1);
  for (int r = 0; r < nc_; ++r) {
    for (int dy = -r; dy <= r; ++dy)
      for (int dx = -r; dx <= r; ++dx) {
        if (std::max(std::abs(dx), std::abs(dy)) != r) continue;
        int jx = ix + dx, jy = iy + dy;
        if (cell_blocked(jx, jy)) continue;
        if (!seg_no_cross(p, cell_center(jx, jy))) continue;
        return jy * nc_ + jx;
      }
    if (r > 30) break;
  }
  fail("PathThroughSingularity", "no reachable routing cell near endpoint");
}

Polyline Scene::grid_route(cplx from, cplx to) const {
  if (seg_ok(from, to)) return {from, to};
  int s = find_hop_cell(from), t = find_hop_cell(to);
  if (s == t) {
    cplx c = cell_center(s % nc_, s / nc_);
    return {from, c, to};
  }
  const int n2 = nc_ * nc_;
  std::vector<double> dist(n2, 1e300);
  std::vector<int> prev(n2, -1);
  cplx goal = cell_center(t % nc_, t / nc_);
  auto h = [&](int id) { return std::abs(cell_center(id % nc_, id / nc_) - goal); };
  using QN = std::pair<double, int>;
  std::priority_queue<QN, std::vector<QN>, std::greater<>> pq;
  dist[s] = 0;
  pq.push({h(s), s});
  while (!pq.empty()) {
    auto [f, u] = pq.top();
    pq.pop();
    if (u == t) break;
    if (f - h(u) > dist[u] * (1 + 1e-12) + 1e-12) continue;
    int ux = u % nc_, uy = u / nc_;
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        if (!dx && !dy) continue;
        int vx = ux + dx, vy = uy + dy;
        if (cell_blocked(vx, vy)) continue;
        if (dx && dy && (cell_blocked(ux + dx, uy) || cell_blocked(ux, uy + dy)))
          continue;
        int v = vy * nc_ + vx;
        double nd = dist[u] + std::hypot((double)dx, (double)dy);
        if (nd < dist[v]) {
          dist[v] = nd;
          prev[v] = u;
          pq.push({nd + h(v), v});
        }
      }
  }
  require(dist[t] < 1e300, "PathThroughSingularity", "routing failed: endpoints separated");
  Polyline path{from};
  Polyline cells;
  for (int u = t; u != -1; u = prev[u]) cells.push_back(cell_center(u % nc_, u / nc_));
  std::reverse(cells.begin(), cells.end());
  for (cplx c : cells) path.push_back(c);
  path.push_back(to);
  // string pulling
  Polyline out{path.front()};
  size_t i = 0;
  while (i + 1 < path.size()) {
    size_t best = i + 1;
    for (size_t j = path.size() - 1; j > i + 1; --j)
      if (seg_ok(path[i], path[j])) { best = j; break; }
    out.push_back(path[best]);
    i = best;
  }
  return out;
}

Polyline Scene::far_leg(cplx z, double* theta_on_ring) const {
  Polyline leg{z};
  double th = std::arg(z);
  if (has_ray_) {
    double delta = std::asin(std::min(1.0, extent_ / std::abs(z))) + 0.12;
    if (ang_dist(th, ray_angle_) < delta) {
      double t1 = ray_angle_ + delta + 0.1, t2 = ray_angle_ - delta - 0.1;
      double tgt = ang_dist(th, t1) < ang_dist(th, t2) ? t1 : t2;
      double d = std::remainder(tgt - th, 2 * pi);
      int steps = std::max(2, (int)(std::abs(d) / (pi / 40)));
      for (int k = 1; k <= steps; ++k)
        leg.push_back(std::abs(z) * std::exp(iu * (th + d * k / steps)));
      th += d;
    }
  }
  leg.push_back(ring_ * std::exp(iu * th));
  *theta_on_ring = th;
  return leg;
}

Polyline Scene::route(cplx from, cplx to) const {
  require(finalized_, "RouterState", "scene not finalized");
  bool from_far = std::abs(from) > ring_ * 1.0001, to_far = std::abs(to) > ring_ * 1.0001;
  if (!from_far && !to_far) return grid_route(from, to);
  auto arc_between = [&](double th1, double th2) {
    double d = std::remainder(th2 - th1, 2 * pi);
    if (has_ray_) {
      double rel = std::remainder(ray_angle_ - th1, 2 * pi);
      bool crosses = (d > 0 && rel > 0 && rel < d) || (d < 0 && rel < 0 && rel > d);
      if (crosses) d = d > 0 ? d - 2 * pi : d + 2 * pi;
    }
    Polyline arc;
    int steps = std::max(1, (int)(std::abs(d) / (pi / 40)));
    for (int k = 1; k <= steps; ++k)
      arc.push_back(ring_ * std::exp(iu * (th1 + d * k / steps)));
    return arc;
  };
  double th_from = 0, th_to = 0;
  if (from_far && to_far) {
    Polyline path = far_leg(from, &th_from);
    Polyline leg = far_leg(to, &th_to);
    std::reverse(leg.begin(), leg.end());
    for (cplx p : arc_between(th_from, th_to)) path.push_back(p);
    for (size_t i = 1; i < leg.size(); ++i) path.push_back(leg[i]);
    return path;
  }
  if (from_far) {
    Polyline path = far_leg(from, &th_from);
    Polyline inner = grid_route(path.back(), to);
    for (size_t i = 1; i < inner.size(); ++i) path.push_back(inner[i]);
    return path;
  }
  Polyline leg = far_leg(to, &th_to);
  std::reverse(leg.begin(), leg.end());
  Polyline path = grid_route(from, leg.front());
  for (size_t i = 1; i < leg.size(); ++i) path.push_back(leg[i]);
  return path;
}

} // namespace btx
