#pragma once
#include "btx/geom.hpp"

namespace btx {

// Obstacle scene for path routing. Paths produced by route() avoid crossing
// every obstacle segment and keep clearance from obstacles and marked points.
// An optional infinite ray obstacle (base + direction) is handled separately
// in the far field: finite truncation is added to the grid, and far arcs
// never sweep across the ray direction.
class Scene {
public:
  Scene() = default;
  Scene(std::vector<Seg> obstacles, std::vector<cplx> singular, double clearance);

  // optional infinite ray obstacle; call before finalize
  void set_ray(cplx base, double angle);
  void finalize();

  bool finalized() const { return finalized_; }
  double extent() const { return extent_; }
  double ring_radius() const { return ring_; }
  bool has_ray() const { return has_ray_; }
  double ray_angle() const { return ray_angle_; }
  const std::vector<Seg>& obstacles() const { return obstacles_; }

  // true if segment a-b crosses no obstacle and keeps soft clearance
  bool seg_ok(cplx a, cplx b, double soft_factor = 1.0) const;
  // true if segment a-b crosses no obstacle (clearance ignored)
  bool seg_no_cross(cplx a, cplx b) const;

  Polyline route(cplx from, cplx to) const;

private:
  std::vector<Seg> obstacles_;
  std::vector<cplx> singular_;
  double clearance_ = 0.05;
  bool has_ray_ = false;
  cplx ray_base_ = 0;
  double ray_angle_ = 0;
  bool finalized_ = false;
  double extent_ = 1, ring_ = 2, box_ = 3;
  SegGrid grid_;
  // routing lattice
  int nc_ = 168;
  double cell_ = 0;
  std::vector<char> blocked_;
  cplx cell_center(int ix, int iy) const;
  bool cell_blocked(int ix, int iy) const;
  int find_hop_cell(cplx p) const;
  Polyline grid_route(cplx from, cplx to) const;
  Polyline far_leg(cplx z, double* theta_on_ring) const;
  double point_min_dist(cplx p) const;
};

} // namespace btx
