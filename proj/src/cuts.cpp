#include "btx/cuts.hpp"
#include "btx/errors.hpp"
#include "btx/periods.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace btx {
namespace {

constexpr double kpi = 3.141592653589793238462643383279502884;

struct Dsu {
  std::vector<int> p;
  explicit Dsu(int n) : p(n) { std::iota(p.begin(), p.end(), 0); }
  int find(int v) { return p[v] == v ? v : p[v] = find(p[v]); }
  void join(int a, int b) { p[find(a)] = find(b); }
};

struct Adj {
  int nverts = 0;
  std::vector<std::pair<int, int>> edges;
  std::vector<std::vector<int>> at; // incident edge ids per vertex
};

Adj make_adj(const ForestGraph& f) {
  Adj a;
  a.nverts = f.nverts;
  a.edges = f.edges;
  a.at.resize(f.nverts);
  for (size_t e = 0; e < f.edges.size(); ++e) {
    auto [u, v] = f.edges[e];
    require(u >= 0 && u < f.nverts && v >= 0 && v < f.nverts && u != v,
            "TopologyMismatch", "edge endpoints out of range or looped");
    a.at[u].push_back((int)e);
    a.at[v].push_back((int)e);
  }
  for (int v = 0; v < f.nverts; ++v)
    require(a.at[v].size() <= 3, "TopologyMismatch", "vertex valency above three");
  Dsu dsu(f.nverts);
  for (auto [u, v] : f.edges) {
    require(dsu.find(u) != dsu.find(v), "TopologyMismatch", "input graph has a cycle");
    dsu.join(u, v);
  }
  return a;
}

int other_end(const Adj& a, int e, int v) {
  return a.edges[e].first == v ? a.edges[e].second : a.edges[e].first;
}

// Component sizes of the subgraph of alive edges; isolated vertices count as
// size-1 components.
bool all_components_even(const Adj& a, const std::vector<char>& alive) {
  Dsu dsu(a.nverts);
  for (size_t e = 0; e < a.edges.size(); ++e)
    if (alive[e]) dsu.join(a.edges[e].first, a.edges[e].second);
  std::vector<int> size(a.nverts, 0);
  for (int v = 0; v < a.nverts; ++v) size[dsu.find(v)]++;
  for (int v = 0; v < a.nverts; ++v)
    if (dsu.find(v) == v && size[v] % 2 != 0) return false;
  return true;
}

std::vector<int> valences(const Adj& a, const std::vector<char>& alive) {
  std::vector<int> val(a.nverts, 0);
  for (size_t e = 0; e < a.edges.size(); ++e)
    if (alive[e]) {
      val[a.edges[e].first]++;
      val[a.edges[e].second]++;
    }
  return val;
}

// Links of the maximal bivalent chain through vertex v, ordered end to end.
std::vector<int> chain_links(const Adj& a, const std::vector<char>& alive,
                             const std::vector<int>& val, int v) {
  std::vector<int> inc;
  for (int e : a.at[v])
    if (alive[e]) inc.push_back(e);
  auto walk = [&](int e) {
    std::vector<int> links;
    int cur = v, ce = e;
    while (true) {
      links.push_back(ce);
      int nxt = other_end(a, ce, cur);
      if (val[nxt] != 2) break;
      for (int f2 : a.at[nxt])
        if (alive[f2] && f2 != ce) {
          ce = f2;
          break;
        }
      cur = nxt;
    }
    return links;
  };
  std::vector<int> left = walk(inc[0]), links(left.rbegin(), left.rend());
  std::vector<int> right = walk(inc[1]);
  links.insert(links.end(), right.begin(), right.end());
  return links;
}

} // namespace

ForestGraph forest_view(const CriticalGraph& g) {
  ForestGraph f;
  while (f.nverts < (int)g.verts.size() && !g.verts[f.nverts].saddle) f.nverts++;
  for (size_t a = 0; a < g.arcs.size(); ++a) {
    const TrajectoryArc& arc = g.arcs[a];
    if (arc.v_to < 0) continue;
    if (arc.v_from >= f.nverts || arc.v_to >= f.nverts) continue;
    f.edges.push_back({arc.v_from, arc.v_to});
    f.labels.push_back((int)a);
  }
  return f;
}

CutStructure branch_cut_structure(const ForestGraph& f) {
  Adj adj = make_adj(f);
  std::vector<char> alive(f.edges.size(), 1);
  require(all_components_even(adj, alive), "OddComponent",
          "a component covers an odd number of branch points");

  while (true) {
    std::vector<int> val = valences(adj, alive);
    int pivot = -1;
    for (int v = 0; v < adj.nverts && pivot < 0; ++v)
      if (val[v] == 2) pivot = v;
    if (pivot < 0) break;

    std::vector<int> links = chain_links(adj, alive, val, pivot);
    int chosen = -1;
    for (int par = 0; par < 2; ++par) {
      std::vector<char> tent = alive;
      for (size_t i = par; i < links.size(); i += 2) tent[links[i]] = 0;
      if (all_components_even(adj, tent)) {
        require(chosen < 0, "OddComponent", "ambiguous chain split");
        chosen = par;
      }
    }
    require(chosen >= 0, "OddComponent", "no even split of a bivalent chain");
    for (size_t i = chosen; i < links.size(); i += 2) alive[links[i]] = 0;
  }

  std::vector<int> val = valences(adj, alive);
  for (int v = 0; v < adj.nverts; ++v)
    require(val[v] == 1 || val[v] == 3, "OddComponent",
            "pruned valency outside {1,3}");

  CutStructure cs;
  std::vector<int> kept;
  for (size_t e = 0; e < f.edges.size(); ++e)
    if (alive[e]) kept.push_back((int)e);
  std::sort(kept.begin(), kept.end(), [&](int a, int b) {
    int la = f.labels.empty() ? a : f.labels[a];
    int lb = f.labels.empty() ? b : f.labels[b];
    return la < lb;
  });
  for (int e : kept) cs.edges.push_back(f.labels.empty() ? e : f.labels[e]);

  // components over kept edges, ordered by their smallest vertex
  Dsu dsu(adj.nverts);
  for (int e : kept) dsu.join(f.edges[e].first, f.edges[e].second);
  std::vector<int> comp_of(adj.nverts, -1);
  for (int v = 0; v < adj.nverts; ++v) {
    int r = dsu.find(v);
    if (comp_of[r] < 0) {
      comp_of[r] = (int)cs.comps.size();
      cs.comps.push_back({});
    }
    comp_of[v] = comp_of[r];
    cs.comps[comp_of[v]].verts.push_back(v);
  }
  for (size_t pos = 0; pos < kept.size(); ++pos)
    cs.comps[comp_of[f.edges[kept[pos]].first]].edges.push_back((int)pos);
  for (auto& cc : cs.comps)
    for (int v : cc.verts)
      if (val[v] == 3) cc.trivalent++;

  // bipartite orientation: tail at even BFS depth from the component's first
  // vertex, so every trivalent vertex is all-sources or all-sinks
  std::vector<int> depth(adj.nverts, -1);
  for (const CutComponent& cc : cs.comps) {
    std::vector<int> queue = {cc.verts[0]};
    depth[cc.verts[0]] = 0;
    for (size_t qi = 0; qi < queue.size(); ++qi) {
      int v = queue[qi];
      for (int e : adj.at[v])
        if (alive[e]) {
          int w = other_end(adj, e, v);
          if (depth[w] < 0) {
            depth[w] = depth[v] + 1;
            queue.push_back(w);
          }
        }
    }
  }
  cs.tail.resize(kept.size());
  cs.head.resize(kept.size());
  for (size_t pos = 0; pos < kept.size(); ++pos) {
    auto [u, v] = f.edges[kept[pos]];
    if (depth[u] % 2 != 0) std::swap(u, v);
    cs.tail[pos] = u;
    cs.head[pos] = v;
  }

  cs.base_vertex = 0;
  for (size_t pos = 0; pos < kept.size() && cs.base_edge < 0; ++pos)
    if (cs.tail[pos] == cs.base_vertex || cs.head[pos] == cs.base_vertex)
      cs.base_edge = (int)pos;
  return cs;
}

CutStructure branch_cut_structure(const CriticalGraph& g) {
  return branch_cut_structure(forest_view(g));
}

CutStats component_stats(const CutStructure& cs) {
  CutStats st;
  int covered = 0;
  for (const CutComponent& cc : cs.comps) {
    st.b.push_back((int)cc.verts.size());
    st.e.push_back((int)cc.edges.size());
    st.tri.push_back(cc.trivalent);
    require(st.e.back() == st.b.back() - 1, "TopologyMismatch",
            "cut component is not a tree");
    require(cc.trivalent == st.b.back() / 2 - 1, "TopologyMismatch",
            "trivalent count off for a tree with odd valencies");
    covered += st.b.back();
    st.E += st.e.back();
    st.T += cc.trivalent;
  }
  st.K = (int)cs.comps.size();
  require(covered % 2 == 0, "OddComponent", "odd covered vertex count");
  st.genus = covered / 2 - 1;
  require(st.E == 2 * st.genus + 2 - st.K, "TopologyMismatch", "edge total off");
  require(st.T == st.genus + 1 - st.K, "TopologyMismatch", "trivalent total off");
  return st;
}

ContourSystem contour_paths(const CutStructure& cs) {
  ContourSystem sys;
  // adjacency within the cut subgraph, by edge position
  int nverts = 0;
  for (const CutComponent& cc : cs.comps)
    for (int v : cc.verts) nverts = std::max(nverts, v + 1);
  std::vector<std::vector<int>> at(nverts);
  for (size_t pos = 0; pos < cs.edges.size(); ++pos) {
    at[cs.tail[pos]].push_back((int)pos);
    at[cs.head[pos]].push_back((int)pos);
  }
  for (size_t ci = 0; ci < cs.comps.size(); ++ci) {
    const CutComponent& cc = cs.comps[ci];
    std::vector<int> leaves;
    for (int v : cc.verts)
      if (at[v].size() == 1) leaves.push_back(v);
    for (size_t li = 1; li < leaves.size(); ++li) {
      // unique tree path leaves[0] -> leaves[li] by DFS
      std::vector<int> stack = {leaves[0]}, via(nverts, -1), prev(nverts, -2);
      prev[leaves[0]] = -1;
      while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        for (int pos : at[v]) {
          int w = cs.tail[pos] == v ? cs.head[pos] : cs.tail[pos];
          if (prev[w] == -2) {
            prev[w] = v;
            via[w] = pos;
            stack.push_back(w);
          }
        }
      }
      Contour k;
      k.comp = (int)ci;
      for (int v = leaves[li]; prev[v] >= 0; v = prev[v]) {
        k.edges.push_back(via[v]);
        k.dir.push_back(cs.head[via[v]] == v ? +1 : -1);
      }
      std::reverse(k.edges.begin(), k.edges.end());
      std::reverse(k.dir.begin(), k.dir.end());
      sys.contours.push_back(std::move(k));
    }
  }
  return sys;
}

CutStructure currents_from_weights(const CutStructure& cs, const ContourSystem& sys) {
  CutStructure out = cs;
  out.current.assign(cs.edges.size(), 0.0);
  double wsum = 0;
  for (const Contour& k : sys.contours) {
    wsum += std::abs(k.weight);
    for (size_t i = 0; i < k.edges.size(); ++i)
      out.current[k.edges[i]] += double(k.dir[i]) * k.weight;
  }
  require(out.base_edge >= 0, "TopologyMismatch", "cut structure has no base edge");
  for (size_t pos = 0; pos < out.current.size(); ++pos)
    require(std::abs(out.current[pos]) > 1e-13 * wsum, "VanishingCurrent",
            "net current vanishes on a cut edge");
  cplx ref = out.current[out.base_edge];
  for (cplx& cur : out.current) cur /= ref;
  return out;
}

bool kirchhoff_check(cplx r1, cplx r2, cplx r3) {
  double m = std::max({std::abs(r1), std::abs(r2), std::abs(r3)});
  return std::abs(r1 + r2 + r3) < 1e-12 * m;
}

namespace {

EdgeBundle ydx_bundle(const Curve& c) {
  return [&c](cplx x, cplx wt, cplx* out) { out[0] = c.y_from_wtilde(x, wt); };
}

// h and the continued radical at x, routed from the field anchor with the
// usual jittered straight paths.
void probe_h_w(const Curve& c, const HField& hf, cplx x, double* h, cplx* w) {
  cplx w0 = c.wtilde_canonical(hf.anchor);
  std::vector<Polyline> paths;
  paths.push_back({hf.anchor, x});
  cplx d = x - hf.anchor;
  double L = std::abs(d);
  cplx u = d / L;
  for (int s : {1, -1, 2, -2, 3, -3, 4, -4})
    paths.push_back({hf.anchor, hf.anchor + 0.5 * d + cplx(0, 1) * u * (0.07 * s * L), x});
  for (const Polyline& path : paths) {
    try {
      BundleResult r = integrate_bundle(c, path, w0, 1, ydx_bundle(c));
      *h = std::real(hf.base + r.value[0]);
      *w = r.w_end;
      return;
    } catch (const Error& e) {
      if (e.code() != std::string("PathThroughSingularity")) throw;
    }
  }
  fail("PathThroughSingularity", "no clear probe path from the anchor");
}

// Departure angles of the graph arcs at a vertex, CCW.
std::vector<double> vertex_angles(const CriticalGraph& g, int v) {
  std::vector<double> out;
  for (int a : g.verts[v].arcs) {
    const TrajectoryArc& arc = g.arcs[a];
    out.push_back(arc.v_from == v ? arc.angle_from : arc.angle_to);
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Gradient ascent of h from a point just off the leaf vertex out to the
// escape circle. The wedge between the local rays is picked on the branch
// continuous off the cuts, and the seeded radical is flipped onto the same
// branch, so the flow climbs into a growth sector and never re-enters the
// sea. The tilt on the start direction keeps the path off exact symmetry
// lines through interior saddles.
Polyline ascend_to_sector(const Curve& c, const HField& hf, const CriticalGraph& g,
                          const std::vector<int>& cut_arcs, int leaf) {
  std::vector<double> rays = vertex_angles(g, leaf);
  cplx v = g.verts[leaf].z;
  double delta = 0.05 * c.min_gap;
  double hbest = -1e300;
  cplx zbest = 0, wbest = 0;
  for (size_t i = 0; i < rays.size(); ++i) {
    double a0 = rays[i], a1 = rays[(i + 1) % rays.size()];
    double gap = a1 - a0;
    if (gap <= 0) gap += 2 * kpi;
    cplx p = v + std::polar(delta, a0 + 0.5 * gap + 0.07);
    double hs;
    cplx wp;
    probe_h_w(c, hf, p, &hs, &wp);
    double ha = h_eval(c, hf, g, cut_arcs, p);
    if (ha * hs < 0) wp = -wp;
    if (ha > hbest) {
      hbest = ha;
      zbest = p;
      wbest = wp;
    }
  }
  require(hbest > 0, "TopologyMismatch", "no growth region beside a cut endpoint");

  std::vector<cplx> sing = c.singular_points();
  Polyline pts = {zbest};
  cplx z = zbest, w = wbest;
  double R = c.escape_radius();
  for (int step = 0; step < 20000; ++step) {
    if (std::abs(z) >= R) return pts;
    cplx y = c.y_from_wtilde(z, w);
    cplx u = std::conj(y) / std::abs(y);
    double dnear = 1e300;
    for (cplx s : sing) dnear = std::min(dnear, std::abs(z - s));
    double ds = 0.5 * std::max(0.03 * c.min_gap, std::min(dnear, 0.3 * (1 + std::abs(z))));
    cplx za = z + ds * u;
    cplx wa = c.wtilde_step(z, za, w);
    cplx ya = c.y_from_wtilde(za, wa);
    cplx zn = z + 0.5 * ds * (u + std::conj(ya) / std::abs(ya));
    w = c.wtilde_step(z, zn, w);
    z = zn;
    pts.push_back(z);
  }
  fail("StallDetected", "sector ascent did not reach the escape circle");
}

// Arc polyline in traversal order from vertex u, interior points offset to
// the left of travel; endpoints are dropped so contours hop the vertices.
void append_offset_walk(const CriticalGraph& g, int arc_id, int u, double off,
                        Polyline* out) {
  const TrajectoryArc& arc = g.arcs[arc_id];
  Polyline p = arc.pts;
  if (arc.v_from != u) std::reverse(p.begin(), p.end());
  for (size_t i = 1; i + 1 < p.size(); ++i) {
    cplx t = p[i + 1] - p[i - 1];
    double L = std::abs(t);
    if (L == 0) continue;
    out->push_back(p[i] + off * cplx(0, 1) * t / L);
  }
}

} // namespace

ContourSystem route_contours(const Curve& c, const CriticalGraph& g,
                             const CutStructure& cs, const TraceOptions& opts) {
  HField hf = make_h_field(c, opts.boutroux_tol);
  ContourSystem sys = contour_paths(cs);
  double off = 1e-3 * c.min_gap;
  std::vector<Polyline> tails(g.verts.size());
  for (Contour& k : sys.contours) {
    int first = cs.tail[k.edges.front()];
    if (k.dir.front() < 0) first = cs.head[k.edges.front()];
    int last = cs.head[k.edges.back()];
    if (k.dir.back() < 0) last = cs.tail[k.edges.back()];
    if (tails[first].empty())
      tails[first] = ascend_to_sector(c, hf, g, cs.edges, first);
    if (tails[last].empty())
      tails[last] = ascend_to_sector(c, hf, g, cs.edges, last);
    k.pts.assign(tails[first].rbegin(), tails[first].rend());
    int at = first;
    for (size_t i = 0; i < k.edges.size(); ++i) {
      append_offset_walk(g, cs.edges[k.edges[i]], at, off, &k.pts);
      int pos = k.edges[i];
      at = (cs.tail[pos] == at) ? cs.head[pos] : cs.tail[pos];
    }
    k.pts.insert(k.pts.end(), tails[last].begin(), tails[last].end());
  }
  return sys;
}

} // namespace btx
