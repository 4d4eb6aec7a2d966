#pragma once
#include "btx/types.hpp"
#include <functional>

namespace btx {

struct Seg {
  cplx a, b;
};

double seg_point_dist(const Seg& s, cplx p);
double seg_seg_dist(const Seg& s1, const Seg& s2);
// Proper crossing test; fills interpolation parameters t (on s1) and u (on s2).
bool seg_seg_cross(const Seg& s1, const Seg& s2, double* t = nullptr, double* u = nullptr);

double polyline_length(const Polyline& p);
double polyline_point_dist(const Polyline& p, cplx z);
// Winding number of the implicitly-closed polyline around z (angle accumulation).
int winding_number(const Polyline& loop, cplx z);
// Signed area (positive = CCW) of implicitly-closed polyline.
double signed_area(const Polyline& loop);

// Douglas-Peucker simplification, keeps endpoints; open polyline.
Polyline simplify_polyline(const Polyline& p, double eps);

// Uniform spatial hash over a segment soup, used for clearance queries.
class SegGrid {
public:
  SegGrid() = default;
  void build(std::vector<Seg> segs, double cell);
  bool empty() const { return segs_.empty(); }
  // True if seg q stays at distance > r from every soup segment.
  bool clear(const Seg& q, double r) const;
  bool crosses(const Seg& q) const;
  double min_dist(const Seg& q, double cutoff = 1e300) const;
  const std::vector<Seg>& segs() const { return segs_; }

private:
  std::vector<Seg> segs_;
  double cell_ = 1.0;
  double x0_ = 0, y0_ = 0;
  int nx_ = 0, ny_ = 0;
  std::vector<std::vector<int>> bins_;
  void cells_near(const Seg& q, double r, std::vector<int>& out) const;
};

// Closed loops bounding the region {dist(p, chain) < rho} on a local grid
// (marching squares). Loops are oriented with the region on the left:
// outer boundaries CCW, hole boundaries CW. Loops are simplified; every
// returned vertex keeps distance >= 0.45*rho from the chain.
std::vector<Polyline> offset_region_boundary(const Polyline& chain, double rho,
                                             int grid_n = 280);

} // namespace btx
