// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "quadcurl/basis.hpp"
#include "quadcurl/mesh.hpp"
#include "quadcurl/quadrature.hpp"

namespace quadcurl {

using ScalarField = std::function<double(const Vec3&)>;
using VectorField = std::function<Vec3(const Vec3&)>;

/// A finite element family bound to a mesh with a global DOF numbering.
///
/// Numbering is entity-major: vertex DOFs, then edge DOFs, then face DOFs
/// (vector Lagrange interleaves the three components per scalar DOF). Local
/// shape functions are built in the ascending-global vertex frame, so every
/// local entity already runs in its global direction and all stored
/// `cell_signs` are +1.
class FESpace {
 public:
  FESpace(std::shared_ptr<const Mesh> mesh, Family family, bool homogeneous_bc)
      : mesh_(std::move(mesh)), family_(family), homogeneous_bc_(homogeneous_bc) {
    if (!mesh_) throw std::invalid_argument("FESpace: null mesh");
    build();
  }

  const Mesh& mesh() const { return *mesh_; }
  const std::shared_ptr<const Mesh>& mesh_ptr() const { return mesh_; }
  const Family& family() const { return family_; }
  int ndof() const { return ndof_; }
  int local_dim() const { return local_dim_; }
  bool zero_mean() const { return family_.kind == FamilyKind::PressureP1ZeroMean; }
  bool homogeneous_bc() const { return homogeneous_bc_; }

  /// Global DOF indices of cell `c` in local shape-function order.
  const int* cell_dofs(int c) const { return &cell_dofs_[static_cast<std::size_t>(c) * local_dim_]; }
  const std::int8_t* cell_signs(int c) const { return &cell_signs_[static_cast<std::size_t>(c) * local_dim_]; }

  /// Sorted set of DOFs fixed to zero by the essential boundary condition.
  const std::vector<int>& constrained() const { return constrained_; }
  const std::vector<std::uint8_t>& constrained_mask() const { return constrained_mask_; }
  int num_free() const { return ndof_ - static_cast<int>(constrained_.size()); }
  std::vector<int> free_dofs() const {
    std::vector<int> out;
    out.reserve(num_free());
    for (int i = 0; i < ndof_; ++i)
      if (!constrained_mask_[i]) out.push_back(i);
    return out;
  }

  /// Shape functions of cell `c` at reference point `ref`.
  void shapes(const CellGeometry& geo, const Vec3& ref, ShapeValues& out) const {
    evaluate_shapes(family_, reference_barycentric(ref), geo.grad_lambda, out);
  }

 private:
  void build();

  std::shared_ptr<const Mesh> mesh_;
  Family family_;
  bool homogeneous_bc_ = false;
  int ndof_ = 0;
  int local_dim_ = 0;
  std::vector<int> cell_dofs_;
  std::vector<std::int8_t> cell_signs_;
  std::vector<int> constrained_;
  std::vector<std::uint8_t> constrained_mask_;
};

namespace detail {

/// Global edge ids of the six sorted-frame local edges of a cell and global
/// face ids of the four sorted-frame local faces.
struct SortedEntities {
  std::array<int, 6> edge{};
  std::array<int, 4> face{};
};

inline SortedEntities sorted_entities(const Mesh& mesh, const std::array<int, 4>& v) {
  SortedEntities s;
  for (int e = 0; e < 6; ++e) s.edge[e] = mesh.find_edge(v[kTetEdges[e][0]], v[kTetEdges[e][1]]);
  for (int f = 0; f < 4; ++f)
    s.face[f] = mesh.find_face(v[kSortedFaces[f][0]], v[kSortedFaces[f][1]], v[kSortedFaces[f][2]]);
  return s;
}

}  // namespace detail

inline void FESpace::build() {
  const Mesh& m = *mesh_;
  const int nv = m.num_vertices(), ne = m.num_edges(), nf = m.num_faces();
  local_dim_ = family_.local_dim();
  const int k = family_.degree;

  int nscalar = 0;  // scalar Lagrange count used by the vector family
  switch (family_.kind) {
    case FamilyKind::LagrangeScalar:
    case FamilyKind::PressureP1ZeroMean:
      ndof_ = (k == 1) ? nv : nv + ne;
      break;
    case FamilyKind::LagrangeVector:
      nscalar = (k == 1) ? nv : nv + ne;
      ndof_ = 3 * nscalar;
      break;
    case FamilyKind::Nedelec1:
      ndof_ = (k == 1) ? ne : 2 * ne + 2 * nf;
      break;
  }

  cell_dofs_.assign(static_cast<std::size_t>(m.num_cells()) * local_dim_, -1);
  cell_signs_.assign(cell_dofs_.size(), 1);
  for (int c = 0; c < m.num_cells(); ++c) {
    std::array<int, 4> v = m.cells[c];
    std::sort(v.begin(), v.end());
    const auto ent = detail::sorted_entities(m, v);
    int* dofs = &cell_dofs_[static_cast<std::size_t>(c) * local_dim_];

    std::vector<int> scalar;
    for (int i = 0; i < 4; ++i) scalar.push_back(v[i]);
    if (k == 2)
      for (int e = 0; e < 6; ++e) scalar.push_back(nv + ent.edge[e]);

    switch (family_.kind) {
      case FamilyKind::LagrangeScalar:
      case FamilyKind::PressureP1ZeroMean:
        std::copy(scalar.begin(), scalar.end(), dofs);
        break;
      case FamilyKind::LagrangeVector:
        for (std::size_t a = 0; a < scalar.size(); ++a)
          for (int comp = 0; comp < 3; ++comp) dofs[3 * a + comp] = 3 * scalar[a] + comp;
        break;
      case FamilyKind::Nedelec1:
        if (k == 1) {
          std::copy(ent.edge.begin(), ent.edge.end(), dofs);
        } else {
          for (int e = 0; e < 6; ++e) {
            dofs[2 * e] = 2 * ent.edge[e];
            dofs[2 * e + 1] = 2 * ent.edge[e] + 1;
          }
          for (int f = 0; f < 4; ++f) {
            dofs[12 + 2 * f] = 2 * ne + 2 * ent.face[f];
            dofs[12 + 2 * f + 1] = 2 * ne + 2 * ent.face[f] + 1;
          }
        }
        break;
    }
  }

  constrained_mask_.assign(ndof_, 0);
  if (homogeneous_bc_ && family_.kind != FamilyKind::PressureP1ZeroMean) {
    auto mark_scalar = [&](int s) {
      if (family_.kind == FamilyKind::LagrangeVector) {
        for (int comp = 0; comp < 3; ++comp) constrained_mask_[3 * s + comp] = 1;
      } else {
        constrained_mask_[s] = 1;
      }
    };
    if (family_.is_nedelec()) {
      for (int e = 0; e < ne; ++e) {
        if (!m.boundary_edge[e]) continue;
        if (k == 1) {
          constrained_mask_[e] = 1;
        } else {
          constrained_mask_[2 * e] = constrained_mask_[2 * e + 1] = 1;
        }
      }
      if (k == 2)
        for (int f = 0; f < nf; ++f)
          if (m.boundary_face[f]) constrained_mask_[2 * ne + 2 * f] = constrained_mask_[2 * ne + 2 * f + 1] = 1;
    } else {
      for (int v = 0; v < nv; ++v)
        if (m.boundary_vertex[v]) mark_scalar(v);
      if (k == 2)
        for (int e = 0; e < ne; ++e)
          if (m.boundary_edge[e]) mark_scalar(nv + e);
    }
  }
  constrained_.clear();
  for (int i = 0; i < ndof_; ++i)
    if (constrained_mask_[i]) constrained_.push_back(i);
}

inline std::shared_ptr<const FESpace> build_space(std::shared_ptr<const Mesh> mesh, Family family,
                                                  bool homogeneous_bc) {
  return std::make_shared<const FESpace>(std::move(mesh), family, homogeneous_bc);
}

inline const std::vector<int>& constrained_dofs(const FESpace& space) { return space.constrained(); }

/// Value (and derivatives) of a discrete field at a reference point of a cell.
inline void evaluate_field(const FESpace& space, const Eigen::VectorXd& coeffs, int cell,
                           const CellGeometry& geo, const Vec3& ref, ShapeValues& scratch, Vec3& value,
                           Mat3& grad, Vec3& curl) {
  space.shapes(geo, ref, scratch);
  value.setZero();
  grad.setZero();
  curl.setZero();
  const int* dofs = space.cell_dofs(cell);
  const std::int8_t* sg = space.cell_signs(cell);
  for (int i = 0; i < space.local_dim(); ++i) {
    const double c = sg[i] * coeffs[dofs[i]];
    value += c * scratch.value[i];
    grad += c * scratch.grad[i];
    curl += c * scratch.curl[i];
  }
}

namespace detail {

inline int quadrature_for_moments(const Family& fam) { return std::max(2 * fam.degree, 6); }

// Local Nedelec coefficients (sorted frame) of a field given on one cell as a
// function of the barycentric coordinates. Per edge: moments against the
// Legendre weights 1 and 2s-1. Per face (degree 2): moments against the two
// edge vectors of the face after removing the edge part. Every functional
// only sees the tangential trace on its own entity, so neighbouring cells
// produce the same shared coefficients.
template <class Eval>
Eigen::VectorXd local_nedelec_interpolant(int k, const CellGeometry& geo, Eval&& eval) {
  std::array<Vec3, 4> xv;
  xv[0] = geo.origin;
  for (int i = 1; i < 4; ++i) xv[i] = geo.origin + geo.jacobian.col(i - 1);
  const int qd = quadrature_for_moments(Family::nedelec(k)) + 2;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(Family::nedelec(k).local_dim());

  const QuadRule line = line_rule(qd);
  for (int e = 0; e < 6; ++e) {
    const int a = kTetEdges[e][0], b = kTetEdges[e][1];
    const Vec3 t = xv[b] - xv[a];
    double m0 = 0.0, m1 = 0.0;
    for (std::size_t q = 0; q < line.size(); ++q) {
      const double s = line.points[q][0];
      std::array<double, 4> lam{0, 0, 0, 0};
      lam[a] = 1.0 - s;
      lam[b] = s;
      const double ut = eval(lam).dot(t);
      m0 += line.weights[q] * ut;
      m1 += line.weights[q] * ut * (2.0 * s - 1.0);
    }
    if (k == 1) {
      out[e] = m0;
    } else {
      // W has moments (1, 0) and grad(l_a l_b) has (0, -1/3)
      out[2 * e] = m0;
      out[2 * e + 1] = -3.0 * m1;
    }
  }
  if (k == 1) return out;

  const QuadRule tri = triangle_rule(qd);
  const Family fam = Family::nedelec(2);
  ShapeValues sv;
  for (int f = 0; f < 4; ++f) {
    const auto& loc = kSortedFaces[f];
    const Vec3 t1 = xv[loc[1]] - xv[loc[0]];
    const Vec3 t2 = xv[loc[2]] - xv[loc[0]];
    Eigen::Matrix2d mat = Eigen::Matrix2d::Zero();
    Eigen::Vector2d rhs = Eigen::Vector2d::Zero();
    for (std::size_t q = 0; q < tri.size(); ++q) {
      const double s = tri.points[q][0], r = tri.points[q][1];
      const double w = tri.weights[q];
      std::array<double, 4> lam{0, 0, 0, 0};
      lam[loc[0]] = 1.0 - s - r;
      lam[loc[1]] = s;
      lam[loc[2]] = r;
      evaluate_shapes(fam, lam, geo.grad_lambda, sv);
      Vec3 resid = eval(lam);
      for (int le = 0; le < 12; ++le) resid -= out[le] * sv.value[le];
      rhs[0] += w * resid.dot(t1);
      rhs[1] += w * resid.dot(t2);
      for (int j = 0; j < 2; ++j) {
        const Vec3& phi = sv.value[12 + 2 * f + j];
        mat(0, j) += w * phi.dot(t1);
        mat(1, j) += w * phi.dot(t2);
      }
    }
    const Eigen::Vector2d coef = mat.partialPivLu().solve(rhs);
    out[12 + 2 * f] = coef[0];
    out[12 + 2 * f + 1] = coef[1];
  }
  return out;
}

inline Vec3 physical_point(const CellGeometry& geo, const std::array<double, 4>& lam) {
  return geo.map(Vec3(lam[1], lam[2], lam[3]));
}

inline Eigen::VectorXd interpolate_nedelec(const FESpace& space, const VectorField& field) {
  const Mesh& m = space.mesh();
  const int k = space.family().degree;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(space.ndof());
  for (int c = 0; c < m.num_cells(); ++c) {
    const CellGeometry geo = cell_geometry(m, c);
    const Eigen::VectorXd local = local_nedelec_interpolant(
        k, geo, [&](const std::array<double, 4>& lam) { return field(physical_point(geo, lam)); });
    const int* dofs = space.cell_dofs(c);
    for (int i = 0; i < space.local_dim(); ++i) out[dofs[i]] = local[i];
  }
  return out;
}

template <class Eval>
Eigen::VectorXd interpolate_nodal(const FESpace& space, int ncomp, Eval&& eval) {
  const Mesh& m = space.mesh();
  const int nv = m.num_vertices();
  const int nscalar = (space.family().degree == 1) ? nv : nv + m.num_edges();
  Eigen::VectorXd out(space.ndof());
  for (int s = 0; s < nscalar; ++s) {
    const Vec3 x = (s < nv) ? m.vertices[s]
                            : Vec3(0.5 * (m.vertices[m.edges[s - nv][0]] + m.vertices[m.edges[s - nv][1]]));
    const Vec3 val = eval(x);
    for (int c = 0; c < ncomp; ++c) out[ncomp * s + c] = val[c];
  }
  return out;
}

}  // namespace detail

/// Canonical interpolant: nodal values for Lagrange spaces, tangential
/// moments for Nedelec spaces. Constrained DOFs are not zeroed.
inline Eigen::VectorXd interpolate(const FESpace& space, const VectorField& field) {
  switch (space.family().kind) {
    case FamilyKind::Nedelec1:
      return detail::interpolate_nedelec(space, field);
    case FamilyKind::LagrangeVector:
      return detail::interpolate_nodal(space, 3, field);
    default:
      throw std::invalid_argument("interpolate: vector field given for a scalar space");
  }
}

inline Eigen::VectorXd interpolate_scalar(const FESpace& space, const ScalarField& field) {
  if (!space.family().is_scalar()) throw std::invalid_argument("interpolate: scalar field given for a vector space");
  return detail::interpolate_nodal(space, 1, [&](const Vec3& x) { return Vec3(field(x), 0.0, 0.0); });
}

}  // namespace quadcurl
