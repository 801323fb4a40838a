#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace ymmb {

/// Oriented edge occurrence in a face boundary word.
struct SignedEdge {
  int edge = 0;
  int sign = 1;  // +1 or -1

  bool operator==(const SignedEdge&) const = default;
};

struct Edge {
  int source = 0;
  int target = 0;

  bool operator==(const Edge&) const = default;
};

struct Face {
  int base = 0;
  std::vector<SignedEdge> word;

  bool operator==(const Face&) const = default;
};

/// Combinatorial closed oriented surface. Faces carry an explicit base
/// vertex and an ordered boundary word so face holonomies are unambiguous.
struct OrientedCellComplex {
  int vertex_count = 0;
  std::vector<Edge> edges;
  std::vector<Face> faces;
  int genus = 0;
  std::vector<double> face_weights;
  std::vector<double> edge_weights;
  int base_vertex = 0;

  int euler_characteristic() const {
    return vertex_count - static_cast<int>(edges.size()) + static_cast<int>(faces.size());
  }

  bool operator==(const OrientedCellComplex&) const = default;
};

struct SpanningTree {
  std::vector<int> tree_edges;
  int root = 0;
  std::vector<int> free_edges;  // ascending edge index
  /// Per vertex: edge connecting it to its parent (-1 at the root).
  std::vector<int> parent_edge;
  /// Vertices in breadth-first order from the root.
  std::vector<int> bfs_order;
};

class ComplexError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

OrientedCellComplex build_minimal_genus_complex(int genus);
OrientedCellComplex build_torus_grid(int n, int m);
OrientedCellComplex build_sphere_complex();

/// Deterministic breadth-first tree, neighbours visited by ascending edge index.
SpanningTree spanning_tree(const OrientedCellComplex& complex, int root);
SpanningTree spanning_tree(const OrientedCellComplex& complex);

struct ValidationCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;
  bool ok() const;
  const ValidationCheck* find(const std::string& name) const;
};

/// Checks: "euler", "orientation", "closed_walks", "weights", "indices".
ValidationReport validate(const OrientedCellComplex& complex);

/// Scales face weights so they sum to `total_area`.
void normalize_total_area(OrientedCellComplex& complex, double total_area);

/// FNV-1a hash over the combinatorial data and weights.
std::uint64_t complex_hash(const OrientedCellComplex& complex);

}  // namespace ymmb
