// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "quadcurl/fe_space.hpp"

namespace quadcurl {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// The bilinear forms that appear in the mixed systems. Entry (i, j) of an
/// assembled matrix is the form at (trial basis j, test basis i).
enum class FormKind {
  MassVec,         // (u, v)
  CurlCurl,        // (curl u, curl v)
  GradGrad,        // (grad phi, grad psi)
  GradScalarHcurl, // (grad m, s): trial scalar Lagrange, test Nedelec
  PressureDiv,     // (p, div psi): trial pressure, test vector Lagrange
  CurlHcurlVsVec,  // (curl r, psi): trial Nedelec, test vector Lagrange
  VecVsCurl,       // (phi, curl s): trial vector Lagrange, test Nedelec
};

inline const char* form_name(FormKind k) {
  switch (k) {
    case FormKind::MassVec: return "MASS_VEC";
    case FormKind::CurlCurl: return "CURL_CURL";
    case FormKind::GradGrad: return "GRAD_GRAD";
    case FormKind::GradScalarHcurl: return "GRADSCALAR_HCURL";
    case FormKind::PressureDiv: return "PRESSURE_DIV";
    case FormKind::CurlHcurlVsVec: return "CURL_HCURL_VS_VEC";
    case FormKind::VecVsCurl: return "VEC_VS_CURL";
  }
  return "?";
}

namespace detail {

inline bool has_curl(const Family& f) { return f.is_nedelec() || f.is_lagrange_vector(); }

inline void check_form(FormKind kind, const Family& trial, const Family& test) {
  bool ok = false;
  switch (kind) {
    case FormKind::MassVec:
      ok = trial.is_scalar() == test.is_scalar();
      break;
    case FormKind::CurlCurl:
      ok = has_curl(trial) && has_curl(test);
      break;
    case FormKind::GradGrad:
      ok = (trial.is_scalar() && test.is_scalar()) || (trial.is_lagrange_vector() && test.is_lagrange_vector());
      break;
    case FormKind::GradScalarHcurl:
      ok = trial.is_scalar() && test.is_nedelec();
      break;
    case FormKind::PressureDiv:
      ok = trial.is_scalar() && test.is_lagrange_vector();
      break;
    case FormKind::CurlHcurlVsVec:
      ok = trial.is_nedelec() && test.is_lagrange_vector();
      break;
    case FormKind::VecVsCurl:
      ok = trial.is_lagrange_vector() && test.is_nedelec();
      break;
  }
  if (!ok)
    throw std::invalid_argument(std::string("assemble_bilinear: ") + form_name(kind) + " is not defined for trial " +
                                trial.name() + " and test " + test.name());
}

inline double integrand(FormKind kind, const ShapeValues& tr, int j, const ShapeValues& te, int i) {
  switch (kind) {
    case FormKind::MassVec: return tr.value[j].dot(te.value[i]);
    case FormKind::CurlCurl: return tr.curl[j].dot(te.curl[i]);
    case FormKind::GradGrad: return tr.grad[j].cwiseProduct(te.grad[i]).sum();
    case FormKind::GradScalarHcurl: return tr.grad[j].row(0).dot(te.value[i].transpose());
    case FormKind::PressureDiv: return tr.value[j][0] * te.div[i];
    case FormKind::CurlHcurlVsVec: return tr.curl[j].dot(te.value[i]);
    case FormKind::VecVsCurl: return tr.value[j].dot(te.curl[i]);
  }
  return 0.0;
}

}  // namespace detail

/// Default exactness degree 2k + 2 for the larger of the two degrees.
inline int default_quadrature_degree(const FESpace& a, const FESpace& b) {
  return 2 * std::max(a.family().degree, b.family().degree) + 2;
}

/// Assemble a bilinear form over all cells. No constraints are applied.
inline SparseMatrix assemble_bilinear(FormKind kind, const FESpace& trial, const FESpace& test,
                                      int quad_degree = 0) {
  if (trial.mesh_ptr() != test.mesh_ptr()) throw std::invalid_argument("assemble_bilinear: spaces on different meshes");
  detail::check_form(kind, trial.family(), test.family());
  const Mesh& mesh = trial.mesh();
  const QuadRule rule = quadrature_rule(quad_degree > 0 ? quad_degree : default_quadrature_degree(trial, test));
  const int ntr = trial.local_dim(), nte = test.local_dim();
  const bool same = (&trial == &test);

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(mesh.num_cells()) * ntr * nte);
  Eigen::MatrixXd local(nte, ntr);
  ShapeValues str, ste;
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const CellGeometry geo = cell_geometry(mesh, c);
    local.setZero();
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const double w = rule.weights[q] * geo.abs_det;
      trial.shapes(geo, rule.points[q], str);
      const ShapeValues* te = &str;
      if (!same) {
        test.shapes(geo, rule.points[q], ste);
        te = &ste;
      }
      for (int i = 0; i < nte; ++i)
        for (int j = 0; j < ntr; ++j) local(i, j) += w * detail::integrand(kind, str, j, *te, i);
    }
    const int* rd = test.cell_dofs(c);
    const int* cd = trial.cell_dofs(c);
    const std::int8_t* rs = test.cell_signs(c);
    const std::int8_t* cs = trial.cell_signs(c);
    for (int i = 0; i < nte; ++i)
      for (int j = 0; j < ntr; ++j)
        if (local(i, j) != 0.0) trips.emplace_back(rd[i], cd[j], rs[i] * cs[j] * local(i, j));
  }
  SparseMatrix out(test.ndof(), trial.ndof());
  out.setFromTriplets(trips.begin(), trips.end());
  out.makeCompressed();
  return out;
}

/// Matrix of the gradient map from a scalar Lagrange space into the Nedelec
/// space of the same degree: column j holds the Nedelec interpolant of the
/// gradient of Lagrange basis function j, which is exact because the
/// gradients lie in the edge space.
inline SparseMatrix discrete_gradient(const FESpace& lagrange, const FESpace& nedelec) {
  if (lagrange.mesh_ptr() != nedelec.mesh_ptr())
    throw std::invalid_argument("discrete_gradient: spaces on different meshes");
  if (lagrange.family().kind != FamilyKind::LagrangeScalar || !nedelec.family().is_nedelec() ||
      lagrange.family().degree != nedelec.family().degree)
    throw std::invalid_argument("discrete_gradient: needs P_k and N_k of equal degree");
  const Mesh& mesh = lagrange.mesh();
  const int k = lagrange.family().degree;
  std::map<std::pair<int, int>, double> entries;
  std::vector<double> val;
  std::vector<Vec3> grad;
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const CellGeometry geo = cell_geometry(mesh, c);
    const int* ld = lagrange.cell_dofs(c);
    const int* nd = nedelec.cell_dofs(c);
    for (int j = 0; j < lagrange.local_dim(); ++j) {
      const Eigen::VectorXd local =
          detail::local_nedelec_interpolant(k, geo, [&](const std::array<double, 4>& lam) {
            detail::lagrange_scalar(k, lam, geo.grad_lambda, val, grad);
            return grad[j];
          });
      for (int i = 0; i < nedelec.local_dim(); ++i) entries[{nd[i], ld[j]}] = local[i];
    }
  }
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(entries.size());
  for (const auto& [key, v] : entries)
    if (v != 0.0) trips.emplace_back(key.first, key.second, v);
  SparseMatrix g(nedelec.ndof(), lagrange.ndof());
  g.setFromTriplets(trips.begin(), trips.end());
  g.makeCompressed();
  return g;
}

namespace detail {

template <class Eval>
Eigen::VectorXd assemble_load_impl(const FESpace& test, Eval&& f, int quad_degree) {
  const Mesh& mesh = test.mesh();
  const QuadRule rule = quadrature_rule(quad_degree > 0 ? quad_degree : default_quadrature_degree(test, test));
  Eigen::VectorXd out = Eigen::VectorXd::Zero(test.ndof());
  ShapeValues sv;
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const CellGeometry geo = cell_geometry(mesh, c);
    const int* dofs = test.cell_dofs(c);
    const std::int8_t* sg = test.cell_signs(c);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const double w = rule.weights[q] * geo.abs_det;
      const Vec3 fx = f(geo.map(rule.points[q]));
      test.shapes(geo, rule.points[q], sv);
      for (int i = 0; i < test.local_dim(); ++i) out[dofs[i]] += w * sg[i] * fx.dot(sv.value[i]);
    }
  }
  return out;
}

}  // namespace detail

/// Load vector (f, v_i) for a vector-valued test space.
inline Eigen::VectorXd assemble_load(const FESpace& test, const VectorField& f, int quad_degree = 0) {
  if (test.family().is_scalar()) throw std::invalid_argument("assemble_load: vector load on a scalar space");
  return detail::assemble_load_impl(test, f, quad_degree);
}

/// Load vector (f, q_i) for a scalar test space.
inline Eigen::VectorXd assemble_load_scalar(const FESpace& test, const ScalarField& f, int quad_degree = 0) {
  if (!test.family().is_scalar()) throw std::invalid_argument("assemble_load_scalar: scalar load on a vector space");
  return detail::assemble_load_impl(test, [&](const Vec3& x) { return Vec3(f(x), 0.0, 0.0); }, quad_degree);
}

/// Coordinate text export: one "row col value" line per stored entry.
inline void write_matrix_coo(std::ostream& os, const SparseMatrix& a) {
  const auto old = os.precision(17);
  for (int r = 0; r < a.outerSize(); ++r)
    for (SparseMatrix::InnerIterator it(a, r); it; ++it) os << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
  os.precision(old);
}

}  // namespace quadcurl
