#pragma once
#include "btx/curve.hpp"
#include "btx/geom.hpp"

#include <optional>
#include <vector>

namespace btx {

// Horizontal trajectories of the quadratic differential -y^2 dx^2: arcs of
// constant h = Re int y dx emanating from the zeros of y^2, the critical
// graph they form, clock-diagram faces with their decorations, and the
// sign test of h alongside a chosen cut system.

struct TraceOptions {
  double rk_tol = 1e-9;        // per-step position tolerance, relative to min_gap
  double drift_tol = 1e-8;     // allowed |Re int y dz| deviation along an arc
  double capture_scale = 1e-4; // capture radius = capture_scale * min_gap
  double boutroux_tol = 1e-6;  // gate on the Boutroux residual
  double mroot_tol = 1e-8;     // |h| at an M root below this is critical
  int max_steps = 200000;
};

// Cached data for h(x) = Re int_{alpha_0}^x y dx on the branch fixed by the
// canonical behavior at infinity.
struct HField {
  cplx anchor = 0;
  cplx base = 0; // int_{alpha_0}^{anchor} y dx, canonical branch at the anchor
};

HField make_h_field(const Curve& c, double boutroux_tol = 1e-6);

// h continued from the anchor along a straight (jittered if needed) path.
// Single-valued up to sign; the sign is the one induced by that path.
double h_eval(const Curve& c, const HField& hf, cplx x);

struct GraphVertex {
  cplx z = 0;
  bool saddle = false; // false: branch point, true: M root
  int index = 0;       // position in c.alpha or c.mroots
  int mult = 1;        // ray count = 3 for branch points, 2*mult+2 for saddles
  double abs_level = 0; // |h| at the vertex (0 for branch points)
  std::vector<int> arcs; // incident arc ids, CCW by departure angle
  int open_count = 0;
  int closed_count = 0;
  int type = 0; // branch points: open_count + 1 (I/II/III); saddles: 0
};

struct TrajectoryArc {
  Polyline pts;     // starts at verts[v_from].z; closed arcs end at verts[v_to].z
  int v_from = -1;
  int v_to = -1;    // -1 for open arcs
  int dir_to = -1;  // asymptotic direction index for open arcs
  double length = 0;      // Strebel length int |y| |dx|, +inf for open arcs
  double drift_max = 0;   // worst |Re int y dz| drift seen while tracing
  double angle_from = 0;  // departure angle at v_from
  double angle_to = 0;    // departure angle at v_to (closed arcs)
};

struct CriticalGraph {
  std::vector<GraphVertex> verts; // branch points first, then saddles
  std::vector<TrajectoryArc> arcs;
  double escape_radius = 0;
  std::vector<double> dirs; // asymptotic direction angles, ascending in (-pi, pi]
};

// The 2 deg V' + 2 directions along which open trajectories escape
// (asymptotic zero rays of Re V), ascending in (-pi, pi].
std::vector<double> stokes_directions(const Curve& c);

// Vertex list of the critical graph: branch points, then M-root saddles.
// Gates on the Boutroux residual and on M-root noncriticality.
std::vector<GraphVertex> graph_vertices(const Curve& c, const TraceOptions& opts = {});

// Trace the level line leaving verts[vertex] along its ray'th local direction
// (rays indexed by ascending departure angle in (-pi, pi]). The returned arc
// is not merged: closed arcs appear once per endpoint.
TrajectoryArc trace_horizontal(const Curve& c, const std::vector<GraphVertex>& verts,
                               int vertex, int ray, const TraceOptions& opts = {});

CriticalGraph build_critical_graph(const Curve& c, const TraceOptions& opts = {});

struct SideHint {
  int cut_arc = -1; // arc id the point lies on
  int side = +1;    // +1: left of the arc's polyline direction, -1: right
};

// h adjacent to a cut system: the straight-path value, sign-corrected by the
// crossing parity against the cut arcs so the result is the continuous branch
// on the cut complement (cuts lie in the zero level set).
double h_eval(const Curve& c, const HField& hf, const CriticalGraph& g,
              const std::vector<int>& cut_arcs, cplx x,
              std::optional<SideHint> hint = std::nullopt);

struct AdmissibilityReport {
  bool admissible = false;
  bool boutroux_ok = false;
  double residual = 0; // Boutroux residual max abs
  bool cuts_negative = false;
  double worst_side_h = 0; // max of h over all offset samples (want < 0)
  bool mroots_ok = false;
  double min_mroot_level = 0;
  std::vector<double> edge_margin; // per cut arc: -max(side h) (positive = good)
};

// Samples h on both sides of every cut arc (offset 1e-3 * min_gap) and checks
// M-root noncriticality. Never throws on a negative verdict.
AdmissibilityReport admissibility_check(const Curve& c, const CriticalGraph& g,
                                        const std::vector<int>& cut_arcs,
                                        const TraceOptions& opts = {});

struct ClockFace {
  bool strip = false;
  // boundary half-edges in walk order: (arc id, +1 forward / -1 backward)
  std::vector<std::pair<int, int>> boundary;
  std::vector<int> sides; // clock side indices crossed (halfplane: exactly one)
  cplx rho = 0;           // strip modulus, normalized Im > 0 (strips only)
};

struct ClockDiagram {
  int n = 0;     // degree of the polynomial -y^2
  int ndirs = 0; // n + 2 polygon vertices
  std::vector<double> dirs;
  int S = 0, P = 0; // strip and halfplane face counts
  std::vector<ClockFace> faces;
  std::vector<double> ell; // per arc: Strebel length by exact quadrature
  std::vector<int> valency, open_cnt, closed_cnt; // per vertex
};

// Face decomposition of the plane along the critical graph with the exact
// decorations (closed-arc lengths, strip moduli).
ClockDiagram clock_extract(const Curve& c, const CriticalGraph& g,
                           const TraceOptions& opts = {});

} // namespace btx
