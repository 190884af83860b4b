#ifndef FRACPOS_MESH_HPP
#define FRACPOS_MESH_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "fracpos/errors.hpp"

namespace fracpos {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

using Triangle = std::array<int, 3>;

/// Planar triangulation with interior nodes numbered first.
///
/// Nodes [0, interior_count) are interior, the rest lie on the boundary.
/// All matrices built on a mesh are indexed the same way, so restricting to
/// the interior is a top-left block. Triangles are counterclockwise.
struct TriMesh {
  std::vector<Point> nodes;
  std::vector<Triangle> triangles;
  std::vector<bool> boundary;
  int interior_count = 0;
  /// Generator parameter h0 when the mesh is structured.
  std::optional<double> h0;

  [[nodiscard]] int node_count() const { return static_cast<int>(nodes.size()); }
  [[nodiscard]] int triangle_count() const {
    return static_cast<int>(triangles.size());
  }
};

struct EdgeInfo {
  std::pair<int, int> endpoints;      // first < second
  std::vector<double> opposite_angles;  // one (boundary) or two (interior)
  bool is_boundary = false;
  bool is_delaunay = true;

  [[nodiscard]] double angle_sum() const {
    double s = 0.0;
    for (double a : opposite_angles) s += a;
    return s;
  }
};

inline constexpr double kDelaunayTolerance = 1e-12;
inline constexpr double kDegenerateArea = 1e-14;

inline double signed_area(const Point& a, const Point& b, const Point& c) {
  return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

inline double triangle_area(const TriMesh& mesh, const Triangle& t) {
  return signed_area(mesh.nodes[t[0]], mesh.nodes[t[1]], mesh.nodes[t[2]]);
}

namespace detail {

inline std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
         static_cast<std::uint32_t>(b);
}

/// Number of triangles sharing each undirected edge.
inline std::unordered_map<std::uint64_t, int> edge_multiplicity(
    const std::vector<Triangle>& tris) {
  std::unordered_map<std::uint64_t, int> count;
  for (const auto& t : tris) {
    for (int k = 0; k < 3; ++k) ++count[edge_key(t[k], t[(k + 1) % 3])];
  }
  return count;
}

inline double angle_at(const Point& apex, const Point& a, const Point& b) {
  const double ux = a.x - apex.x, uy = a.y - apex.y;
  const double vx = b.x - apex.x, vy = b.y - apex.y;
  return std::atan2(std::abs(ux * vy - uy * vx), ux * vx + uy * vy);
}

}  // namespace detail

/// Validate and normalize a raw triangulation.
///
/// Triangles are reoriented counterclockwise. Boundary flags default to the
/// endpoints of edges owned by a single triangle. Nodes are renumbered so
/// interior nodes come first, preserving relative order within each class.
inline TriMesh make_mesh(std::vector<Point> nodes, std::vector<Triangle> tris,
                         std::optional<std::vector<bool>> boundary = std::nullopt,
                         std::optional<double> h0 = std::nullopt) {
  const int n = static_cast<int>(nodes.size());
  for (auto& t : tris) {
    for (int v : t) {
      if (v < 0 || v >= n) {
        throw InvalidParameter("make_mesh: triangle references node " +
                               std::to_string(v) + " of " + std::to_string(n));
      }
    }
    const double area = signed_area(nodes[t[0]], nodes[t[1]], nodes[t[2]]);
    if (std::abs(area) < kDegenerateArea) {
      throw DegenerateTriangle("make_mesh: triangle (" + std::to_string(t[0]) +
                               "," + std::to_string(t[1]) + "," +
                               std::to_string(t[2]) + ") has area " +
                               std::to_string(area));
    }
    if (area < 0) std::swap(t[1], t[2]);
  }

  {
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      return nodes[a].x != nodes[b].x ? nodes[a].x < nodes[b].x
                                      : nodes[a].y < nodes[b].y;
    });
    for (int k = 0; k < n; ++k) {
      for (int l = k + 1; l < n; ++l) {
        const auto& p = nodes[order[k]];
        const auto& q = nodes[order[l]];
        if (q.x - p.x > 1e-12) break;
        if (std::abs(q.y - p.y) <= 1e-12) {
          throw InvalidParameter("make_mesh: duplicate nodes " +
                                 std::to_string(order[k]) + " and " +
                                 std::to_string(order[l]));
        }
      }
    }
  }

  std::vector<bool> flags;
  if (boundary) {
    if (static_cast<int>(boundary->size()) != n) {
      throw InvalidParameter("make_mesh: boundary flag count mismatch");
    }
    flags = std::move(*boundary);
  } else {
    flags.assign(n, false);
    const auto mult = detail::edge_multiplicity(tris);
    for (const auto& t : tris) {
      for (int k = 0; k < 3; ++k) {
        const int a = t[k], b = t[(k + 1) % 3];
        if (mult.at(detail::edge_key(a, b)) == 1) flags[a] = flags[b] = true;
      }
    }
  }

  std::vector<int> new_index(n);
  TriMesh mesh;
  mesh.nodes.reserve(n);
  mesh.boundary.reserve(n);
  for (int pass = 0; pass < 2; ++pass) {
    for (int i = 0; i < n; ++i) {
      if (flags[i] == (pass == 1)) {
        new_index[i] = static_cast<int>(mesh.nodes.size());
        mesh.nodes.push_back(nodes[i]);
        mesh.boundary.push_back(flags[i]);
      }
    }
    if (pass == 0) mesh.interior_count = static_cast<int>(mesh.nodes.size());
  }
  mesh.triangles.reserve(tris.size());
  for (const auto& t : tris) {
    mesh.triangles.push_back({new_index[t[0]], new_index[t[1]], new_index[t[2]]});
  }
  mesh.h0 = h0;
  return mesh;
}

/// Unit square, M x M squares each cut by the SW-NE diagonal.
inline TriMesh uniform_square(int m) {
  if (m < 2) throw InvalidParameter("uniform_square: M must be >= 2");
  std::vector<Point> nodes;
  nodes.reserve((m + 1) * (m + 1));
  for (int j = 0; j <= m; ++j) {
    for (int i = 0; i <= m; ++i) {
      nodes.push_back({static_cast<double>(i) / m, static_cast<double>(j) / m});
    }
  }
  auto id = [m](int i, int j) { return j * (m + 1) + i; };
  std::vector<Triangle> tris;
  tris.reserve(2 * m * m);
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < m; ++i) {
      tris.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      tris.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  }
  return make_mesh(std::move(nodes), std::move(tris), std::nullopt, 1.0 / m);
}

/// Unit square cut into h0 x 2h0 rectangles (h0 = 1/(2M)), each split by
/// both diagonals into four triangles around a node at the crossing point.
///
/// Every vertical edge then faces two angles of 2 atan(2) each, so the
/// vertical edges are the non-Delaunay ones and the mesh size is 2 h0.
inline TriMesh nondelaunay_b(int m) {
  if (m < 2) throw InvalidParameter("nondelaunay_b: M must be >= 2");
  const int nx = 2 * m;  // rectangles per row
  const int ny = m;      // rectangle rows
  const double h0 = 1.0 / nx;
  std::vector<Point> nodes;
  nodes.reserve((nx + 1) * (ny + 1) + nx * ny);
  for (int j = 0; j <= ny; ++j) {
    for (int i = 0; i <= nx; ++i) {
      nodes.push_back({static_cast<double>(i) / nx, static_cast<double>(j) / ny});
    }
  }
  auto corner = [nx](int i, int j) { return j * (nx + 1) + i; };
  const int centre_base = static_cast<int>(nodes.size());
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      nodes.push_back({(i + 0.5) / nx, (j + 0.5) / ny});
    }
  }
  std::vector<Triangle> tris;
  tris.reserve(4 * nx * ny);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const int c = centre_base + j * nx + i;
      const int sw = corner(i, j), se = corner(i + 1, j);
      const int ne = corner(i + 1, j + 1), nw = corner(i, j + 1);
      tris.push_back({sw, se, c});
      tris.push_back({se, ne, c});
      tris.push_back({ne, nw, c});
      tris.push_back({nw, sw, c});
    }
  }
  return make_mesh(std::move(nodes), std::move(tris), std::nullopt, h0);
}

/// Uniform mesh of `uniform_square(M)` with the boundary triangle
/// (1/2,0), (1/2+h0,0), (1/2+h0,h0) subdivided through three extra nodes
/// P = (1/2+h0/2, 0), Q = (1/2+h0/4, h0 eps), R = (1/2+3h0/4, h0 eps).
///
/// The subdivided triangle is filled by the six triangles
/// APQ, PRQ, PBR, AQC, QRC, RBC where A, B, C are its original vertices.
inline TriMesh nondelaunay_e(int m, double eps) {
  if (m < 4 || m % 2 != 0) {
    throw InvalidParameter("nondelaunay_e: M must be even and >= 4");
  }
  if (!(eps > 0.0 && eps < 0.25)) {
    throw InvalidParameter("nondelaunay_e: eps must lie in (0, 1/4)");
  }
  const double h0 = 1.0 / m;
  std::vector<Point> nodes;
  for (int j = 0; j <= m; ++j) {
    for (int i = 0; i <= m; ++i) {
      nodes.push_back({static_cast<double>(i) / m, static_cast<double>(j) / m});
    }
  }
  auto id = [m](int i, int j) { return j * (m + 1) + i; };
  const int ic = m / 2;
  const int a = id(ic, 0), b = id(ic + 1, 0), c = id(ic + 1, 1);
  const int p = static_cast<int>(nodes.size());
  nodes.push_back({0.5 + h0 / 2, 0.0});
  const int q = p + 1;
  nodes.push_back({0.5 + h0 / 4, h0 * eps});
  const int r = p + 2;
  nodes.push_back({0.5 + 3 * h0 / 4, h0 * eps});

  std::vector<Triangle> tris;
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < m; ++i) {
      if (!(i == ic && j == 0)) {
        tris.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      }
      tris.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  }
  tris.push_back({a, p, q});
  tris.push_back({p, r, q});
  tris.push_back({p, b, r});
  tris.push_back({a, q, c});
  tris.push_back({q, r, c});
  tris.push_back({r, b, c});
  return make_mesh(std::move(nodes), std::move(tris), std::nullopt, h0);
}

/// Rhombus with unit sides and a 60 degree angle, tiled by equilateral
/// triangles of side 1/M.
inline TriMesh equilateral(int m) {
  if (m < 2) throw InvalidParameter("equilateral: M must be >= 2");
  const double s = 1.0 / m;
  const double rt3 = std::sqrt(3.0);
  std::vector<Point> nodes;
  for (int j = 0; j <= m; ++j) {
    for (int i = 0; i <= m; ++i) {
      nodes.push_back({s * (i + 0.5 * j), s * 0.5 * rt3 * j});
    }
  }
  auto id = [m](int i, int j) { return j * (m + 1) + i; };
  std::vector<Triangle> tris;
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < m; ++i) {
      tris.push_back({id(i, j), id(i + 1, j), id(i, j + 1)});
      tris.push_back({id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  }
  return make_mesh(std::move(nodes), std::move(tris), std::nullopt, s);
}

/// One record per undirected edge, in order of first appearance.
inline std::vector<EdgeInfo> delaunay_edges(const TriMesh& mesh) {
  std::vector<EdgeInfo> edges;
  std::unordered_map<std::uint64_t, std::size_t> slot;
  for (const auto& t : mesh.triangles) {
    for (int k = 0; k < 3; ++k) {
      const int a = t[k], b = t[(k + 1) % 3], apex = t[(k + 2) % 3];
      const double angle = detail::angle_at(mesh.nodes[apex], mesh.nodes[a],
                                            mesh.nodes[b]);
      const auto key = detail::edge_key(a, b);
      auto it = slot.find(key);
      if (it == slot.end()) {
        slot.emplace(key, edges.size());
        EdgeInfo e;
        e.endpoints = {std::min(a, b), std::max(a, b)};
        e.opposite_angles.push_back(angle);
        edges.push_back(std::move(e));
      } else {
        edges[it->second].opposite_angles.push_back(angle);
      }
    }
  }
  for (auto& e : edges) {
    e.is_boundary = e.opposite_angles.size() == 1;
    e.is_delaunay = e.is_boundary ||
                    e.angle_sum() <= std::numbers::pi + kDelaunayTolerance;
  }
  return edges;
}

inline bool is_delaunay(const TriMesh& mesh) {
  const auto edges = delaunay_edges(mesh);
  return std::all_of(edges.begin(), edges.end(),
                     [](const EdgeInfo& e) { return e.is_delaunay; });
}

/// Sorted neighbor lists (nodes sharing an edge).
inline std::vector<std::vector<int>> adjacency(const TriMesh& mesh) {
  std::vector<std::vector<int>> adj(mesh.nodes.size());
  for (const auto& t : mesh.triangles) {
    for (int k = 0; k < 3; ++k) {
      adj[t[k]].push_back(t[(k + 1) % 3]);
      adj[t[k]].push_back(t[(k + 2) % 3]);
    }
  }
  for (auto& row : adj) {
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
  }
  return adj;
}

inline bool is_strictly_interior(const TriMesh& mesh,
                                 const std::vector<std::vector<int>>& adj,
                                 int node) {
  if (mesh.boundary[node]) return false;
  return std::none_of(adj[node].begin(), adj[node].end(),
                      [&](int k) { return static_cast<bool>(mesh.boundary[k]); });
}

struct NormalityResult {
  bool normal = false;
  std::optional<int> witness;
};

/// A mesh is normal if some strictly interior node P has the property that
/// each neighbor of P has a neighbor (other than P) that is not a neighbor
/// of P. Among qualifying nodes the one closest to the node centroid is
/// returned as witness.
inline NormalityResult is_normal(const TriMesh& mesh) {
  const auto adj = adjacency(mesh);
  double cx = 0.0, cy = 0.0;
  for (const auto& p : mesh.nodes) {
    cx += p.x;
    cy += p.y;
  }
  cx /= static_cast<double>(mesh.nodes.size());
  cy /= static_cast<double>(mesh.nodes.size());

  NormalityResult result;
  double best = 0.0;
  for (int j = 0; j < mesh.interior_count; ++j) {
    if (!is_strictly_interior(mesh, adj, j)) continue;
    const auto& nj = adj[j];
    const bool ok = std::all_of(nj.begin(), nj.end(), [&](int k) {
      return std::any_of(adj[k].begin(), adj[k].end(), [&](int l) {
        return l != j && !std::binary_search(nj.begin(), nj.end(), l);
      });
    });
    if (!ok) continue;
    const double d = std::hypot(mesh.nodes[j].x - cx, mesh.nodes[j].y - cy);
    if (!result.normal || d < best) {
      result.normal = true;
      result.witness = j;
      best = d;
    }
  }
  return result;
}

/// Longest edge.
inline double mesh_size(const TriMesh& mesh) {
  double h = 0.0;
  for (const auto& t : mesh.triangles) {
    for (int k = 0; k < 3; ++k) {
      const auto& a = mesh.nodes[t[k]];
      const auto& b = mesh.nodes[t[(k + 1) % 3]];
      h = std::max(h, std::hypot(a.x - b.x, a.y - b.y));
    }
  }
  return h;
}

inline double total_area(const TriMesh& mesh) {
  double area = 0.0;
  for (const auto& t : mesh.triangles) area += triangle_area(mesh, t);
  return area;
}

}  // namespace fracpos

#endif  // FRACPOS_MESH_HPP
