#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "layoutfuse/geometry.hpp"

namespace layoutfuse {

/// Symmetric boolean adjacency with a zero diagonal.
struct AdjacencyMatrix {
  int n = 0;
  std::vector<std::uint8_t> flags;

  AdjacencyMatrix() = default;
  explicit AdjacencyMatrix(int count) : n(count), flags(static_cast<std::size_t>(count) * count, 0) {}

  bool at(int i, int j) const { return flags[static_cast<std::size_t>(i) * n + j] != 0; }

  void set(int i, int j, bool value = true) {
    if (i == j) return;
    flags[static_cast<std::size_t>(i) * n + j] = value ? 1 : 0;
    flags[static_cast<std::size_t>(j) * n + i] = value ? 1 : 0;
  }

  bool operator==(const AdjacencyMatrix& o) const { return n == o.n && flags == o.flags; }
};

/// A 3D line arising from two adjacent planes.
struct LayoutLine {
  Line3D line;
  int plane_a = -1;
  int plane_b = -1;
};

/// A junction point arising from three mutually adjacent planes.
struct LayoutJunction {
  Junction3D junction;
  int plane_a = -1;
  int plane_b = -1;
  int plane_c = -1;
};

/// Where a merged plane came from: (view, plane index within that view).
struct PlaneSource {
  int image_id = -1;
  int source_plane_index = -1;
};

struct LayoutPlane {
  int id = -1;
  Plane plane;
  std::vector<PlaneSource> sources;
};

/// Final merged room layout: planes, intersection lines, junctions and the
/// plane adjacency matrix, all in one world frame.
struct Layout {
  std::vector<LayoutPlane> planes;
  std::vector<LayoutLine> lines;
  std::vector<LayoutJunction> junctions;
  AdjacencyMatrix adjacency;
  std::vector<std::string> warnings;

  int floor_index() const { return find_class(SemanticClass::Floor); }
  int ceiling_index() const { return find_class(SemanticClass::Ceiling); }

 private:
  int find_class(SemanticClass c) const {
    for (std::size_t i = 0; i < planes.size(); ++i) {
      if (planes[i].plane.semantic_class == c) return static_cast<int>(i);
    }
    return -1;
  }
};

/// Lines from adjacent pairs and junctions from mutually adjacent triples.
/// Pairs whose planes turn out near-parallel are skipped (adjacency between
/// parallel planes is never declared upstream, this is belt only).
inline void derive_lines_and_junctions(const std::vector<Plane>& planes,
                                       const AdjacencyMatrix& adjacency,
                                       std::vector<LayoutLine>* lines,
                                       std::vector<LayoutJunction>* junctions) {
  const int n = static_cast<int>(planes.size());
  lines->clear();
  junctions->clear();
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (!adjacency.at(i, j)) continue;
      try {
        lines->push_back({plane_intersection(planes[i], planes[j]), i, j});
      } catch (const ParallelPlanesError&) {
        continue;
      }
    }
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (!adjacency.at(i, j)) continue;
      for (int k = j + 1; k < n; ++k) {
        if (!adjacency.at(i, k) || !adjacency.at(j, k)) continue;
        try {
          junctions->push_back({junction(planes[i], planes[j], planes[k]), i, j, k});
        } catch (const DegenerateConfigurationError&) {
          continue;
        }
      }
    }
  }
}

/// Line adjacency W_l: lines are related iff they share a junction, i.e. the
/// junction's plane triple contains both lines' parent pairs. Informational;
/// nothing downstream consumes it.
inline AdjacencyMatrix line_adjacency(const Layout& layout) {
  const int n = static_cast<int>(layout.lines.size());
  AdjacencyMatrix w(n);
  auto line_in_junction = [](const LayoutLine& l, const LayoutJunction& j) {
    auto has = [&](int p) { return p == j.plane_a || p == j.plane_b || p == j.plane_c; };
    return has(l.plane_a) && has(l.plane_b);
  };
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      for (const auto& j : layout.junctions) {
        if (line_in_junction(layout.lines[a], j) && line_in_junction(layout.lines[b], j)) {
          w.set(a, b);
          break;
        }
      }
    }
  }
  return w;
}

/// Finite wireframe edges: on every layout line, connect consecutive
/// junctions that involve both of the line's parent planes.
struct WireEdge {
  int junction_a = -1;
  int junction_b = -1;
  int line_index = -1;
};

inline std::vector<WireEdge> wireframe_edges(const Layout& layout) {
  std::vector<WireEdge> edges;
  for (std::size_t li = 0; li < layout.lines.size(); ++li) {
    const auto& line = layout.lines[li];
    std::vector<std::pair<double, int>> on_line;
    for (std::size_t ji = 0; ji < layout.junctions.size(); ++ji) {
      const auto& j = layout.junctions[ji];
      auto has = [&](int p) { return p == j.plane_a || p == j.plane_b || p == j.plane_c; };
      if (!has(line.plane_a) || !has(line.plane_b)) continue;
      const double s = (j.junction.position - line.line.point).dot(line.line.direction);
      on_line.push_back({s, static_cast<int>(ji)});
    }
    std::sort(on_line.begin(), on_line.end());
    for (std::size_t k = 1; k < on_line.size(); ++k) {
      edges.push_back({on_line[k - 1].second, on_line[k].second, static_cast<int>(li)});
    }
  }
  return edges;
}

}  // namespace layoutfuse
