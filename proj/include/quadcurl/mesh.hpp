// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace quadcurl {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Axis-aligned box [lo, hi] per coordinate.
struct Box {
  std::array<double, 2> x{0.0, 1.0};
  std::array<double, 2> y{0.0, 1.0};
  std::array<double, 2> z{0.0, 1.0};

  double volume() const { return (x[1] - x[0]) * (y[1] - y[0]) * (z[1] - z[0]); }
};

/// Local edges and faces of a tetrahedron in terms of its four local vertices.
/// Face i is the one opposite to vertex i.
inline constexpr std::array<std::array<int, 2>, 6> kTetEdges{
    {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}};
inline constexpr std::array<std::array<int, 3>, 4> kTetFaces{
    {{1, 2, 3}, {0, 2, 3}, {0, 1, 3}, {0, 1, 2}}};

/// Tetrahedral mesh with global entity numbering.
///
/// Edges are stored low -> high vertex index and faces as ascending vertex
/// triples. Entity numbering is the lexicographic order of these keys, so it
/// does not depend on the order in which cells are stored. Cells keep their
/// positively oriented vertex order; `cell_edge_signs` is +1 where the local
/// edge (in stored order) runs in the global direction, and
/// `cell_face_signs` is the parity of the permutation that sorts the local
/// face triple.
struct Mesh {
  int n = 0;  // subdivisions per axis; 0 for meshes not built from a box
  Box box;

  std::vector<Vec3> vertices;
  std::vector<std::array<int, 4>> cells;
  std::vector<std::array<int, 2>> edges;
  std::vector<std::array<int, 3>> faces;

  std::vector<std::array<int, 6>> cell_edges;
  std::vector<std::array<std::int8_t, 6>> cell_edge_signs;
  std::vector<std::array<int, 4>> cell_faces;
  std::vector<std::array<std::int8_t, 4>> cell_face_signs;
  std::vector<std::array<int, 2>> face_cells;  // second entry -1 on the boundary

  std::vector<std::uint8_t> boundary_vertex;
  std::vector<std::uint8_t> boundary_edge;
  std::vector<std::uint8_t> boundary_face;

  int num_vertices() const { return static_cast<int>(vertices.size()); }
  int num_edges() const { return static_cast<int>(edges.size()); }
  int num_faces() const { return static_cast<int>(faces.size()); }
  int num_cells() const { return static_cast<int>(cells.size()); }

  /// Signed volume of a cell under its stored vertex order.
  double cell_volume(int c) const {
    const auto& t = cells[c];
    const Vec3& p0 = vertices[t[0]];
    Mat3 j;
    j.col(0) = vertices[t[1]] - p0;
    j.col(1) = vertices[t[2]] - p0;
    j.col(2) = vertices[t[3]] - p0;
    return j.determinant() / 6.0;
  }

  int find_edge(int a, int b) const {
    const std::array<int, 2> key{std::min(a, b), std::max(a, b)};
    auto it = std::lower_bound(edges.begin(), edges.end(), key);
    if (it == edges.end() || *it != key) return -1;
    return static_cast<int>(it - edges.begin());
  }

  int find_face(int a, int b, int c) const {
    std::array<int, 3> key{a, b, c};
    std::sort(key.begin(), key.end());
    auto it = std::lower_bound(faces.begin(), faces.end(), key);
    if (it == faces.end() || *it != key) return -1;
    return static_cast<int>(it - faces.begin());
  }
};

namespace detail {

inline int permutation_parity(std::array<int, 3> v) {
  int swaps = 0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j + 1 < 3 - i; ++j)
      if (v[j] > v[j + 1]) {
        std::swap(v[j], v[j + 1]);
        ++swaps;
      }
  return (swaps % 2 == 0) ? 1 : -1;
}

}  // namespace detail

/// Mark boundary faces (exactly one adjacent cell) and the vertices and edges
/// lying in them. Requires `face_cells` and entity tables.
inline void classify_boundary(Mesh& mesh) {
  mesh.boundary_vertex.assign(mesh.vertices.size(), 0);
  mesh.boundary_edge.assign(mesh.edges.size(), 0);
  mesh.boundary_face.assign(mesh.faces.size(), 0);
  for (int f = 0; f < mesh.num_faces(); ++f) {
    if (mesh.face_cells[f][1] >= 0) continue;
    mesh.boundary_face[f] = 1;
    const auto& fv = mesh.faces[f];
    for (int v : fv) mesh.boundary_vertex[v] = 1;
    mesh.boundary_edge[mesh.find_edge(fv[0], fv[1])] = 1;
    mesh.boundary_edge[mesh.find_edge(fv[0], fv[2])] = 1;
    mesh.boundary_edge[mesh.find_edge(fv[1], fv[2])] = 1;
  }
}

/// Build entity tables and adjacency from a vertex/cell soup.
inline Mesh build_mesh(std::vector<Vec3> vertices, std::vector<std::array<int, 4>> cells) {
  Mesh mesh;
  mesh.vertices = std::move(vertices);
  mesh.cells = std::move(cells);

  for (std::size_t c = 0; c < mesh.cells.size(); ++c)
    if (!(mesh.cell_volume(static_cast<int>(c)) > 0.0))
      throw std::invalid_argument("build_mesh: cell with non-positive volume");

  for (const auto& t : mesh.cells) {
    for (const auto& e : kTetEdges)
      mesh.edges.push_back({std::min(t[e[0]], t[e[1]]), std::max(t[e[0]], t[e[1]])});
    for (const auto& f : kTetFaces) {
      std::array<int, 3> key{t[f[0]], t[f[1]], t[f[2]]};
      std::sort(key.begin(), key.end());
      mesh.faces.push_back(key);
    }
  }
  std::sort(mesh.edges.begin(), mesh.edges.end());
  mesh.edges.erase(std::unique(mesh.edges.begin(), mesh.edges.end()), mesh.edges.end());
  std::sort(mesh.faces.begin(), mesh.faces.end());
  mesh.faces.erase(std::unique(mesh.faces.begin(), mesh.faces.end()), mesh.faces.end());

  const std::size_t nc = mesh.cells.size();
  mesh.cell_edges.resize(nc);
  mesh.cell_edge_signs.resize(nc);
  mesh.cell_faces.resize(nc);
  mesh.cell_face_signs.resize(nc);
  mesh.face_cells.assign(mesh.faces.size(), {-1, -1});

  for (std::size_t c = 0; c < nc; ++c) {
    const auto& t = mesh.cells[c];
    for (int le = 0; le < 6; ++le) {
      const int a = t[kTetEdges[le][0]];
      const int b = t[kTetEdges[le][1]];
      mesh.cell_edges[c][le] = mesh.find_edge(a, b);
      mesh.cell_edge_signs[c][le] = static_cast<std::int8_t>(a < b ? 1 : -1);
    }
    for (int lf = 0; lf < 4; ++lf) {
      const std::array<int, 3> tri{t[kTetFaces[lf][0]], t[kTetFaces[lf][1]], t[kTetFaces[lf][2]]};
      const int f = mesh.find_face(tri[0], tri[1], tri[2]);
      mesh.cell_faces[c][lf] = f;
      mesh.cell_face_signs[c][lf] = static_cast<std::int8_t>(detail::permutation_parity(tri));
      auto& fc = mesh.face_cells[f];
      if (fc[0] < 0) {
        fc[0] = static_cast<int>(c);
      } else if (fc[1] < 0) {
        fc[1] = static_cast<int>(c);
      } else {
        throw std::invalid_argument("build_mesh: face shared by more than two cells");
      }
    }
  }
  classify_boundary(mesh);
  return mesh;
}

/// Structured Kuhn (Freudenthal) triangulation of a box with n^3 subcubes and
/// six tetrahedra per subcube, all sharing the subcube's main diagonal.
inline Mesh build_box_mesh(int n, const Box& box = {}) {
  if (n < 1) throw std::invalid_argument("build_box_mesh: n must be >= 1");
  const std::array<const std::array<double, 2>*, 3> iv{&box.x, &box.y, &box.z};
  for (const auto* r : iv)
    if (!((*r)[1] > (*r)[0]) || !std::isfinite((*r)[0]) || !std::isfinite((*r)[1]))
      throw std::invalid_argument("build_box_mesh: degenerate box");

  const int np = n + 1;
  auto vid = [np](int i, int j, int k) { return i + np * (j + np * k); };

  std::vector<Vec3> vertices;
  vertices.reserve(static_cast<std::size_t>(np) * np * np);
  for (int k = 0; k < np; ++k)
    for (int j = 0; j < np; ++j)
      for (int i = 0; i < np; ++i) {
        // exact endpoints so refinement scales h exactly
        auto coord = [n](const std::array<double, 2>& r, int idx) {
          return idx == n ? r[1] : r[0] + (r[1] - r[0]) * static_cast<double>(idx) / n;
        };
        vertices.emplace_back(coord(box.x, i), coord(box.y, j), coord(box.z, k));
      }

  std::array<std::array<int, 3>, 6> perms{};
  {
    std::array<int, 3> p{0, 1, 2};
    int idx = 0;
    do {
      perms[idx++] = p;
    } while (std::next_permutation(p.begin(), p.end()));
  }

  std::vector<std::array<int, 4>> cells;
  cells.reserve(static_cast<std::size_t>(6) * n * n * n);
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i)
        for (const auto& p : perms) {
          std::array<int, 3> pos{i, j, k};
          std::array<int, 4> tet{};
          tet[0] = vid(pos[0], pos[1], pos[2]);
          for (int s = 0; s < 3; ++s) {
            ++pos[p[s]];
            tet[s + 1] = vid(pos[0], pos[1], pos[2]);
          }
          // the path tetrahedron has the orientation sign of its permutation
          if (detail::permutation_parity(p) < 0) std::swap(tet[2], tet[3]);
          cells.push_back(tet);
        }

  Mesh mesh = build_mesh(std::move(vertices), std::move(cells));
  mesh.n = n;
  mesh.box = box;
  return mesh;
}

/// Longest edge over all cells. For box meshes this is the subcube diagonal,
/// computed from the spacing so that refinement halves it exactly.
inline double mesh_size(const Mesh& mesh) {
  if (mesh.n > 0) {
    const Vec3 d((mesh.box.x[1] - mesh.box.x[0]) / mesh.n, (mesh.box.y[1] - mesh.box.y[0]) / mesh.n,
                 (mesh.box.z[1] - mesh.box.z[0]) / mesh.n);
    return d.norm();
  }
  double h = 0.0;
  for (const auto& e : mesh.edges)
    h = std::max(h, (mesh.vertices[e[1]] - mesh.vertices[e[0]]).norm());
  return h;
}

/// Same geometry with cells stored in a different order; `perm[i]` is the old
/// index of the new i-th cell.
inline Mesh permute_cells(const Mesh& mesh, const std::vector<int>& perm) {
  if (perm.size() != mesh.cells.size())
    throw std::invalid_argument("permute_cells: permutation size mismatch");
  std::vector<std::array<int, 4>> cells;
  cells.reserve(perm.size());
  for (int old : perm) cells.push_back(mesh.cells.at(old));
  Mesh out = build_mesh(mesh.vertices, std::move(cells));
  out.n = mesh.n;
  out.box = mesh.box;
  return out;
}

struct MeshCounts {
  int vertices, edges, faces, cells;
  int boundary_vertices, boundary_edges, boundary_faces;
};

inline MeshCounts count_entities(const Mesh& mesh) {
  auto ones = [](const std::vector<std::uint8_t>& v) {
    return static_cast<int>(std::count(v.begin(), v.end(), std::uint8_t{1}));
  };
  return {mesh.num_vertices(), mesh.num_edges(),           mesh.num_faces(),
          mesh.num_cells(),    ones(mesh.boundary_vertex), ones(mesh.boundary_edge),
          ones(mesh.boundary_face)};
}

/// Plain-text export: vertex lines (3 reals) followed by cell lines (4 indices).
inline void write_mesh_text(std::ostream& os, const Mesh& mesh) {
  const auto old = os.precision(17);
  for (const auto& v : mesh.vertices) os << v[0] << ' ' << v[1] << ' ' << v[2] << '\n';
  for (const auto& c : mesh.cells) os << c[0] << ' ' << c[1] << ' ' << c[2] << ' ' << c[3] << '\n';
  os.precision(old);
}

}  // namespace quadcurl
