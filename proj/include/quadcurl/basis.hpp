// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "quadcurl/mesh.hpp"

namespace quadcurl {

enum class FamilyKind { LagrangeScalar, LagrangeVector, Nedelec1, PressureP1ZeroMean };

/// A finite element family and its polynomial degree.
struct Family {
  FamilyKind kind = FamilyKind::LagrangeScalar;
  int degree = 1;

  static Family lagrange(int k) { return checked({FamilyKind::LagrangeScalar, k}); }
  static Family lagrange_vector(int k) { return checked({FamilyKind::LagrangeVector, k}); }
  static Family nedelec(int k) { return checked({FamilyKind::Nedelec1, k}); }
  static Family pressure() { return {FamilyKind::PressureP1ZeroMean, 1}; }

  bool is_scalar() const {
    return kind == FamilyKind::LagrangeScalar || kind == FamilyKind::PressureP1ZeroMean;
  }
  bool is_nedelec() const { return kind == FamilyKind::Nedelec1; }
  bool is_lagrange_vector() const { return kind == FamilyKind::LagrangeVector; }

  /// Number of basis functions on one tetrahedron.
  int local_dim() const {
    const int k = degree;
    switch (kind) {
      case FamilyKind::LagrangeScalar:
      case FamilyKind::PressureP1ZeroMean:
        return (k + 1) * (k + 2) * (k + 3) / 6;
      case FamilyKind::LagrangeVector:
        return 3 * (k + 1) * (k + 2) * (k + 3) / 6;
      case FamilyKind::Nedelec1:
        return k * (k + 2) * (k + 3) / 2;
    }
    return 0;
  }

  std::string name() const {
    switch (kind) {
      case FamilyKind::LagrangeScalar: return "P" + std::to_string(degree);
      case FamilyKind::LagrangeVector: return "P" + std::to_string(degree) + "^3";
      case FamilyKind::Nedelec1: return "N" + std::to_string(degree);
      case FamilyKind::PressureP1ZeroMean: return "P1/R";
    }
    return "?";
  }

  friend bool operator==(const Family&, const Family&) = default;

 private:
  static Family checked(Family f) {
    if (f.degree < 1 || f.degree > 2) throw std::invalid_argument("Family: degree must be 1 or 2");
    return f;
  }
};

/// Shape functions of one cell evaluated at one point.
///
/// Scalar functions keep their value in `value[i][0]` and their gradient in
/// row 0 of `grad[i]`. For vector fields `grad[i](c, j)` is d(component c)/dx_j.
/// `curl` and `div` are filled for vector-valued families only.
struct ShapeValues {
  std::vector<Vec3> value;
  std::vector<Mat3> grad;
  std::vector<Vec3> curl;
  std::vector<double> div;

  void resize(int n) {
    value.assign(n, Vec3::Zero());
    grad.assign(n, Mat3::Zero());
    curl.assign(n, Vec3::Zero());
    div.assign(n, 0.0);
  }
  int size() const { return static_cast<int>(value.size()); }
};

/// Local entity numbering inside a cell whose vertices are taken in ascending
/// global order: edges (0,1),(0,2),(0,3),(1,2),(1,3),(2,3) and faces
/// (0,1,2),(0,1,3),(0,2,3),(1,2,3), every entity oriented low -> high.
inline constexpr std::array<std::array<int, 3>, 4> kSortedFaces{
    {{0, 1, 2}, {0, 1, 3}, {0, 2, 3}, {1, 2, 3}}};

namespace detail {

inline void lagrange_scalar(int k, const std::array<double, 4>& l, const std::array<Vec3, 4>& gl,
                            std::vector<double>& val, std::vector<Vec3>& grad) {
  if (k == 1) {
    val.resize(4);
    grad.resize(4);
    for (int i = 0; i < 4; ++i) {
      val[i] = l[i];
      grad[i] = gl[i];
    }
    return;
  }
  val.resize(10);
  grad.resize(10);
  for (int i = 0; i < 4; ++i) {
    val[i] = l[i] * (2.0 * l[i] - 1.0);
    grad[i] = (4.0 * l[i] - 1.0) * gl[i];
  }
  for (int e = 0; e < 6; ++e) {
    const int a = kTetEdges[e][0], b = kTetEdges[e][1];
    val[4 + e] = 4.0 * l[a] * l[b];
    grad[4 + e] = 4.0 * (l[a] * gl[b] + l[b] * gl[a]);
  }
}

}  // namespace detail

/// Evaluate the local basis of `fam` from barycentric coordinates and their
/// gradients (vertex order ascending by global index).
///
/// Nedelec degree 1 uses the Whitney functions W_ab = l_a grad l_b - l_b grad l_a.
/// Degree 2 uses, per edge, W_ab and grad(l_a l_b), then per face (a,b,c) the
/// pair l_c W_ab, l_a W_bc. Their tangential traces on an edge or face depend
/// only on that entity's vertices, which makes the global space conforming.
inline void evaluate_shapes(const Family& fam, const std::array<double, 4>& l,
                            const std::array<Vec3, 4>& gl, ShapeValues& out) {
  out.resize(fam.local_dim());
  switch (fam.kind) {
    case FamilyKind::LagrangeScalar:
    case FamilyKind::PressureP1ZeroMean: {
      std::vector<double> v;
      std::vector<Vec3> g;
      detail::lagrange_scalar(fam.degree, l, gl, v, g);
      for (std::size_t i = 0; i < v.size(); ++i) {
        out.value[i][0] = v[i];
        out.grad[i].row(0) = g[i].transpose();
      }
      return;
    }
    case FamilyKind::LagrangeVector: {
      std::vector<double> v;
      std::vector<Vec3> g;
      detail::lagrange_scalar(fam.degree, l, gl, v, g);
      for (std::size_t a = 0; a < v.size(); ++a)
        for (int c = 0; c < 3; ++c) {
          const std::size_t i = 3 * a + c;
          out.value[i][c] = v[a];
          out.grad[i].row(c) = g[a].transpose();
          out.div[i] = g[a][c];
          out.curl[i] = g[a].cross(Vec3::Unit(c));
        }
      return;
    }
    case FamilyKind::Nedelec1: {
      auto whitney = [&](int a, int b) { return Vec3(l[a] * gl[b] - l[b] * gl[a]); };
      auto whitney_curl = [&](int a, int b) { return Vec3(2.0 * gl[a].cross(gl[b])); };
      if (fam.degree == 1) {
        for (int e = 0; e < 6; ++e) {
          const int a = kTetEdges[e][0], b = kTetEdges[e][1];
          out.value[e] = whitney(a, b);
          out.curl[e] = whitney_curl(a, b);
        }
        return;
      }
      for (int e = 0; e < 6; ++e) {
        const int a = kTetEdges[e][0], b = kTetEdges[e][1];
        out.value[2 * e] = whitney(a, b);
        out.curl[2 * e] = whitney_curl(a, b);
        out.value[2 * e + 1] = l[a] * gl[b] + l[b] * gl[a];
        out.curl[2 * e + 1].setZero();
      }
      // curl(l W) = grad l x W + l curl W
      auto face_fn = [&](int i, int s, int a, int b) {
        const Vec3 w = whitney(a, b);
        out.value[i] = l[s] * w;
        out.curl[i] = gl[s].cross(w) + l[s] * whitney_curl(a, b);
      };
      for (int f = 0; f < 4; ++f) {
        const int a = kSortedFaces[f][0], b = kSortedFaces[f][1], c = kSortedFaces[f][2];
        face_fn(12 + 2 * f, c, a, b);
        face_fn(12 + 2 * f + 1, a, b, c);
      }
      return;
    }
  }
}

/// Basis table on the reference tetrahedron (0,0,0),(1,0,0),(0,1,0),(0,0,1).
struct BasisTable {
  Eigen::MatrixXd values;       // local functions x components
  Eigen::MatrixXd derivatives;  // curls (Nedelec), gradients (scalar) or flattened Jacobians
};

inline std::array<double, 4> reference_barycentric(const Vec3& x) {
  return {1.0 - x[0] - x[1] - x[2], x[0], x[1], x[2]};
}

inline const std::array<Vec3, 4>& reference_barycentric_gradients() {
  static const std::array<Vec3, 4> g{Vec3(-1, -1, -1), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1)};
  return g;
}

inline BasisTable reference_basis(const Family& fam, const Vec3& point, bool want_derivative = true) {
  ShapeValues sv;
  evaluate_shapes(fam, reference_barycentric(point), reference_barycentric_gradients(), sv);
  const int n = sv.size();
  BasisTable t;
  const int ncomp = fam.is_scalar() ? 1 : 3;
  t.values.resize(n, ncomp);
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < ncomp; ++c) t.values(i, c) = sv.value[i][c];
  if (!want_derivative) return t;
  if (fam.is_nedelec()) {
    t.derivatives.resize(n, 3);
    for (int i = 0; i < n; ++i) t.derivatives.row(i) = sv.curl[i].transpose();
  } else if (fam.is_scalar()) {
    t.derivatives.resize(n, 3);
    for (int i = 0; i < n; ++i) t.derivatives.row(i) = sv.grad[i].row(0);
  } else {
    t.derivatives.resize(n, 9);
    for (int i = 0; i < n; ++i)
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) t.derivatives(i, 3 * r + c) = sv.grad[i](r, c);
  }
  return t;
}

/// Affine geometry of one cell with its vertices in ascending global order.
struct CellGeometry {
  std::array<int, 4> vertex{};  // ascending global vertex ids
  Vec3 origin = Vec3::Zero();
  Mat3 jacobian = Mat3::Zero();
  double abs_det = 0.0;
  std::array<Vec3, 4> grad_lambda{};

  Vec3 map(const Vec3& ref) const { return origin + jacobian * ref; }
  double volume() const { return abs_det / 6.0; }
};

inline CellGeometry cell_geometry(const Mesh& mesh, int cell) {
  CellGeometry g;
  g.vertex = mesh.cells[cell];
  std::sort(g.vertex.begin(), g.vertex.end());
  g.origin = mesh.vertices[g.vertex[0]];
  for (int j = 0; j < 3; ++j) g.jacobian.col(j) = mesh.vertices[g.vertex[j + 1]] - g.origin;
  const double det = g.jacobian.determinant();
  g.abs_det = std::abs(det);
  const Mat3 inv = g.jacobian.inverse();
  for (int i = 0; i < 3; ++i) g.grad_lambda[i + 1] = inv.row(i).transpose();
  g.grad_lambda[0] = -(g.grad_lambda[1] + g.grad_lambda[2] + g.grad_lambda[3]);
  return g;
}

}  // namespace quadcurl
