#pragma once
#include "btx/trajectory.hpp"

#include <vector>

namespace btx {

// Branch cut selection inside the critical graph: the unique spanning
// subgraph in which every vertex keeps 1 or 3 of its closed arcs, the
// orientation and net-current bookkeeping on its edges, and the oriented
// integration contours that thread the cut components sector to sector.

// Combinatorial skeleton: branch vertices and the closed arcs joining them.
// labels carry caller-meaningful edge ids (arc ids for a critical graph).
struct ForestGraph {
  int nverts = 0;
  std::vector<std::pair<int, int>> edges;
  std::vector<int> labels; // empty means identity labels 0..E-1
};

ForestGraph forest_view(const CriticalGraph& g);

struct CutComponent {
  std::vector<int> verts; // vertex ids, ascending
  std::vector<int> edges; // positions into CutStructure::edges, ascending
  int trivalent = 0;
};

struct CutStructure {
  std::vector<int> edges;      // kept edge labels, ascending
  std::vector<int> tail, head; // orientation per kept edge (vertex ids);
                               // at every trivalent vertex the incident edges
                               // are all incoming or all outgoing
  std::vector<cplx> current;   // net current per kept edge; empty until
                               // currents_from_weights fills it
  std::vector<CutComponent> comps;
  int base_vertex = 0;  // lowest vertex id; current normalization reference
  int base_edge = -1;   // position of the kept edge attached to base_vertex
};

// Per-component vertex/edge/trivalent counts and their totals. Construction
// guarantees e_i = b_i - 1, E = 2g + 2 - K and T = g + 1 - K with the genus
// read off from the covered vertex count.
struct CutStats {
  std::vector<int> b, e, tri;
  int E = 0, K = 0, T = 0;
  int genus = 0;
};

struct Contour {
  Polyline pts;           // sector to sector; empty for abstract systems
  std::vector<int> edges; // traversed cut edges, positions into cs.edges
  std::vector<int> dir;   // +1: along the stored orientation, -1: against
  cplx weight = 1.0;
  int comp = 0;
};

struct ContourSystem {
  std::vector<Contour> contours;
};

// Keep, per vertex, an odd number of closed arcs: drop every second link of
// each maximal bivalent chain so all residual components stay even, and
// iterate. The result is the unique admissible selection; a component with
// an odd vertex count (or an uncovered vertex) raises OddComponent.
CutStructure branch_cut_structure(const ForestGraph& f);
CutStructure branch_cut_structure(const CriticalGraph& g);

CutStats component_stats(const CutStructure& cs);

// Star routing: per component, one contour from the lowest-id leaf to every
// other leaf along the unique tree path (b_i/2 contours, every edge covered).
// Weights default to 1; callers may reassign them before taking currents.
ContourSystem contour_paths(const CutStructure& cs);

// contour_paths plus geometric realization: each contour descends from a
// growth sector to the first leaf, follows the cut arcs offset into the
// h < 0 side, and climbs back out to a sector along the h gradient.
ContourSystem route_contours(const Curve& c, const CriticalGraph& g,
                             const CutStructure& cs,
                             const TraceOptions& opts = {});

// Net current per cut edge: the signed sum of the weights of the contours
// traversing it, rescaled so the edge at the base vertex carries exactly 1.
// A vanishing net current on any edge raises VanishingCurrent. Sums at
// trivalent vertices cancel termwise, so Kirchhoff holds automatically.
CutStructure currents_from_weights(const CutStructure& cs, const ContourSystem& sys);

// |r1 + r2 + r3| < 1e-12 * max |r_i|
bool kirchhoff_check(cplx r1, cplx r2, cplx r3);

} // namespace btx
