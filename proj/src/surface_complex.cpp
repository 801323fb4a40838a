#include "ymmb/surface_complex.hpp"

#include <cstring>
#include <deque>
#include <numeric>

namespace ymmb {

OrientedCellComplex build_minimal_genus_complex(int genus) {
  if (genus < 1) {
    throw ComplexError("minimal genus complex needs genus >= 1 (empty word); use build_sphere_complex for genus 0");
  }
  OrientedCellComplex c;
  c.vertex_count = 1;
  c.genus = genus;
  Face face;
  face.base = 0;
  for (int k = 0; k < genus; ++k) {
    const int a = 2 * k;
    const int b = 2 * k + 1;
    c.edges.push_back({0, 0});
    c.edges.push_back({0, 0});
    face.word.push_back({a, 1});
    face.word.push_back({b, 1});
    face.word.push_back({a, -1});
    face.word.push_back({b, -1});
  }
  c.faces.push_back(face);
  c.face_weights.assign(1, 1.0);
  c.edge_weights.assign(c.edges.size(), 1.0);
  return c;
}

OrientedCellComplex build_torus_grid(int n, int m) {
  if (n < 1 || m < 1) throw ComplexError("torus grid dimensions must be positive");
  if (n * m == 1) {
    throw ComplexError("torus grid (1,1) is a degenerate abelian word: its single face word is a commutator");
  }
  OrientedCellComplex c;
  c.vertex_count = n * m;
  c.genus = 1;
  auto vertex = [&](int i, int j) { return ((j % m + m) % m) * n + ((i % n + n) % n); };
  // Edge 2k runs in the i-direction out of vertex k, edge 2k+1 in the j-direction.
  c.edges.resize(2 * n * m);
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < n; ++i) {
      const int v = vertex(i, j);
      c.edges[2 * v] = {v, vertex(i + 1, j)};
      c.edges[2 * v + 1] = {v, vertex(i, j + 1)};
    }
  }
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < n; ++i) {
      const int v = vertex(i, j);
      Face f;
      f.base = v;
      f.word = {{2 * v, 1}, {2 * vertex(i + 1, j) + 1, 1}, {2 * vertex(i, j + 1), -1}, {2 * v + 1, -1}};
      c.faces.push_back(f);
    }
  }
  c.face_weights.assign(c.faces.size(), 1.0);
  c.edge_weights.assign(c.edges.size(), 1.0);
  return c;
}

OrientedCellComplex build_sphere_complex() {
  OrientedCellComplex c;
  c.vertex_count = 4;
  c.genus = 0;
  // e0:0->1 e1:0->2 e2:0->3 e3:1->2 e4:2->3 e5:1->3
  c.edges = {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {2, 3}, {1, 3}};
  // Outward orientation of the tetrahedron boundary.
  c.faces = {
      {0, {{1, 1}, {3, -1}, {0, -1}}},  // 0->2->1->0
      {0, {{0, 1}, {5, 1}, {2, -1}}},   // 0->1->3->0
      {0, {{2, 1}, {4, -1}, {1, -1}}},  // 0->3->2->0
      {1, {{3, 1}, {4, 1}, {5, -1}}},   // 1->2->3->1
  };
  c.face_weights.assign(c.faces.size(), 1.0);
  c.edge_weights.assign(c.edges.size(), 1.0);
  return c;
}

SpanningTree spanning_tree(const OrientedCellComplex& complex, int root) {
  if (root < 0 || root >= complex.vertex_count) throw ComplexError("spanning tree root out of range");
  const int nv = complex.vertex_count;
  std::vector<std::vector<int>> incident(nv);
  for (int e = 0; e < static_cast<int>(complex.edges.size()); ++e) {
    incident[complex.edges[e].source].push_back(e);
    if (complex.edges[e].target != complex.edges[e].source) incident[complex.edges[e].target].push_back(e);
  }
  SpanningTree tree;
  tree.root = root;
  tree.parent_edge.assign(nv, -1);
  std::vector<bool> seen(nv, false);
  std::vector<bool> in_tree(complex.edges.size(), false);
  std::deque<int> queue{root};
  seen[root] = true;
  while (!queue.empty()) {
    const int v = queue.front();
    queue.pop_front();
    tree.bfs_order.push_back(v);
    for (int e : incident[v]) {
      const int w = complex.edges[e].source == v ? complex.edges[e].target : complex.edges[e].source;
      if (seen[w]) continue;
      seen[w] = true;
      in_tree[e] = true;
      tree.parent_edge[w] = e;
      queue.push_back(w);
    }
  }
  if (static_cast<int>(tree.bfs_order.size()) != nv) throw ComplexError("complex is disconnected");
  for (int e = 0; e < static_cast<int>(complex.edges.size()); ++e) {
    (in_tree[e] ? tree.tree_edges : tree.free_edges).push_back(e);
  }
  return tree;
}

SpanningTree spanning_tree(const OrientedCellComplex& complex) {
  return spanning_tree(complex, complex.base_vertex);
}

bool ValidationReport::ok() const {
  for (const auto& c : checks)
    if (!c.passed) return false;
  return true;
}

const ValidationCheck* ValidationReport::find(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

ValidationReport validate(const OrientedCellComplex& complex) {
  ValidationReport report;
  const int ne = static_cast<int>(complex.edges.size());

  bool indices_ok = complex.vertex_count > 0 && complex.base_vertex >= 0 &&
                    complex.base_vertex < complex.vertex_count &&
                    static_cast<int>(complex.face_weights.size()) == static_cast<int>(complex.faces.size()) &&
                    static_cast<int>(complex.edge_weights.size()) == ne;
  for (const auto& e : complex.edges) {
    indices_ok = indices_ok && e.source >= 0 && e.source < complex.vertex_count && e.target >= 0 &&
                 e.target < complex.vertex_count;
  }
  for (const auto& f : complex.faces) {
    indices_ok = indices_ok && f.base >= 0 && f.base < complex.vertex_count && !f.word.empty();
    for (const auto& s : f.word) indices_ok = indices_ok && s.edge >= 0 && s.edge < ne && (s.sign == 1 || s.sign == -1);
  }
  report.checks.push_back({"indices", indices_ok, indices_ok ? "" : "index or size mismatch"});
  if (!indices_ok) return report;

  const int chi = complex.euler_characteristic();
  report.checks.push_back({"euler", chi == 2 - 2 * complex.genus,
                           "chi=" + std::to_string(chi) + " expected " + std::to_string(2 - 2 * complex.genus)});

  std::vector<int> plus(ne, 0), minus(ne, 0);
  for (const auto& f : complex.faces)
    for (const auto& s : f.word) (s.sign > 0 ? plus : minus)[s.edge]++;
  bool orient = true;
  std::string bad;
  for (int e = 0; e < ne; ++e) {
    if (plus[e] != 1 || minus[e] != 1) {
      orient = false;
      bad += " e" + std::to_string(e);
    }
  }
  report.checks.push_back({"orientation", orient, orient ? "" : "edges not used once per sign:" + bad});

  bool walks = true;
  for (const auto& f : complex.faces) {
    int at = f.base;
    for (const auto& s : f.word) {
      const Edge& e = complex.edges[s.edge];
      const int from = s.sign > 0 ? e.source : e.target;
      const int to = s.sign > 0 ? e.target : e.source;
      if (from != at) walks = false;
      at = to;
    }
    if (at != f.base) walks = false;
  }
  report.checks.push_back({"closed_walks", walks, walks ? "" : "a face word is not a closed walk from its base"});

  bool weights = true;
  for (double w : complex.face_weights) weights = weights && w > 0.0;
  for (double w : complex.edge_weights) weights = weights && w > 0.0;
  report.checks.push_back({"weights", weights, weights ? "" : "nonpositive weight"});
  return report;
}

void normalize_total_area(OrientedCellComplex& complex, double total_area) {
  const double sum = std::accumulate(complex.face_weights.begin(), complex.face_weights.end(), 0.0);
  for (double& w : complex.face_weights) w *= total_area / sum;
}

std::uint64_t complex_hash(const OrientedCellComplex& complex) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xffU;
      h *= 1099511628211ULL;
    }
  };
  auto mix_double = [&mix](double d) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, sizeof bits);
    mix(bits);
  };
  mix(static_cast<std::uint64_t>(complex.vertex_count));
  mix(static_cast<std::uint64_t>(complex.genus));
  mix(static_cast<std::uint64_t>(complex.base_vertex));
  for (const auto& e : complex.edges) {
    mix(static_cast<std::uint64_t>(e.source));
    mix(static_cast<std::uint64_t>(e.target));
  }
  for (const auto& f : complex.faces) {
    mix(static_cast<std::uint64_t>(f.base));
    for (const auto& s : f.word) mix(static_cast<std::uint64_t>(s.sign * (s.edge + 1)));
  }
  for (double w : complex.face_weights) mix_double(w);
  for (double w : complex.edge_weights) mix_double(w);
  return h;
}

}  // namespace ymmb
