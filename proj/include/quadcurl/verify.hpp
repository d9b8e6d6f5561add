// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "quadcurl/manufactured.hpp"
#include "quadcurl/solve.hpp"

namespace quadcurl {

enum class Norm { L2, H1, Hcurl };

/// Exact field for error evaluation. Scalar fields use component 0 of
/// `value` and row 0 of `grad`. Missing callables stand for zero.
struct ExactField {
  VectorField value;
  std::function<Mat3(const Vec3&)> grad;
  VectorField curl;

  static ExactField zero() { return {}; }
};

inline int default_error_quadrature(const FESpace& space) { return 2 * space.family().degree + 4; }

/// Norm of (discrete - exact) by quadrature of exactness 2k + 4. L2 is the
/// plain norm; H1 and Hcurl are full norms (L2 part included).
inline double error_norm(const FESpace& space, const Eigen::VectorXd& coeffs, const ExactField& exact, Norm norm,
                         int quad_degree = 0) {
  const Family& fam = space.family();
  if (norm == Norm::Hcurl && !(fam.is_nedelec() || fam.is_lagrange_vector()))
    throw std::invalid_argument("error_norm: Hcurl norm needs a vector-valued space");
  if (norm == Norm::H1 && fam.is_nedelec()) throw std::invalid_argument("error_norm: H1 norm needs a Lagrange space");
  if (coeffs.size() != space.ndof()) throw std::invalid_argument("error_norm: coefficient vector has the wrong size");
  const Mesh& mesh = space.mesh();
  const QuadRule rule = quadrature_rule(quad_degree > 0 ? quad_degree : default_error_quadrature(space));
  const bool scalar = fam.is_scalar();
  ShapeValues scratch;
  Vec3 v, curl;
  Mat3 grad;
  double sum = 0.0;
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const CellGeometry geo = cell_geometry(mesh, c);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const double w = rule.weights[q] * geo.abs_det;
      const Vec3 x = geo.map(rule.points[q]);
      evaluate_field(space, coeffs, c, geo, rule.points[q], scratch, v, grad, curl);
      Vec3 dv = v;
      if (exact.value) dv -= exact.value(x);
      if (scalar) dv.tail<2>().setZero();
      double e = dv.squaredNorm();
      if (norm == Norm::H1) {
        Mat3 dg = grad;
        if (exact.grad) dg -= exact.grad(x);
        e += scalar ? dg.row(0).squaredNorm() : dg.squaredNorm();
      } else if (norm == Norm::Hcurl) {
        Vec3 dc = curl;
        if (exact.curl) dc -= exact.curl(x);
        e += dc.squaredNorm();
      }
      sum += w * e;
    }
  }
  return std::sqrt(sum);
}

/// L2 norm of an evaluable field over the mesh (quadrature of given degree).
inline double field_l2_norm(const Mesh& mesh, const VectorField& f, int quad_degree) {
  const QuadRule rule = quadrature_rule(quad_degree);
  double sum = 0.0;
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const CellGeometry geo = cell_geometry(mesh, c);
    for (std::size_t q = 0; q < rule.size(); ++q)
      sum += rule.weights[q] * geo.abs_det * f(geo.map(rule.points[q])).squaredNorm();
  }
  return std::sqrt(sum);
}

/// Integral of a discrete scalar field.
inline double integral(const FESpace& space, const Eigen::VectorXd& coeffs) {
  if (!space.family().is_scalar()) throw std::invalid_argument("integral: scalar space expected");
  return assemble_load_scalar(space, [](const Vec3&) { return 1.0; }).dot(coeffs);
}

/// rate_i = log(e_i / e_{i+1}) / log(h_i / h_{i+1}).
inline std::vector<double> estimate_rates(const std::vector<double>& errors, const std::vector<double>& hs) {
  if (errors.size() != hs.size() || errors.size() < 2)
    throw std::invalid_argument("estimate_rates: need matching sequences of length >= 2");
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (!(errors[i] > 0.0) || !(hs[i] > 0.0)) throw std::invalid_argument("estimate_rates: inputs must be positive");
    if (i > 0 && !(hs[i] < hs[i - 1])) throw std::invalid_argument("estimate_rates: h must strictly decrease");
  }
  std::vector<double> out;
  for (std::size_t i = 0; i + 1 < errors.size(); ++i)
    out.push_back(std::log(errors[i] / errors[i + 1]) / std::log(hs[i] / hs[i + 1]));
  return out;
}

// ---------------------------------------------------------------------------
// Exact sequence and stability constants

namespace detail {

inline Eigen::MatrixXd restrict_dense(const SparseMatrix& a, const std::vector<int>& rows, const std::vector<int>& cols) {
  std::vector<int> cpos(a.cols(), -1);
  for (std::size_t j = 0; j < cols.size(); ++j) cpos[cols[j]] = static_cast<int>(j);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(rows.size(), cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (SparseMatrix::InnerIterator it(a, rows[i]); it; ++it)
      if (cpos[it.col()] >= 0) out(i, cpos[it.col()]) = it.value();
  return out;
}

}  // namespace detail

struct ExactSequenceReport {
  int n = 0, k = 0;
  int free_nedelec = 0;
  int free_lagrange = 0;
  int nullity = 0;
  double max_curl_grad = 0.0;  // largest |K g_j| over free Lagrange basis vectors
  double max_boundary_leak = 0.0;  // gradients of free functions on constrained edge DOFs
  bool pass = false;
};

inline constexpr double kCurlGradTol = 1e-13;

/// Discrete exact-sequence check on the n^3 cube for P_k -> N_k with
/// homogeneous conditions. Nullity of the free curl-curl block is counted
/// from its eigenvalues relative to the largest one.
inline ExactSequenceReport check_exact_sequence(int n, int k) {
  auto mesh = std::make_shared<const Mesh>(build_box_mesh(n));
  const auto lag = build_space(mesh, Family::lagrange(k), true);
  const auto ned = build_space(mesh, Family::nedelec(k), true);
  ExactSequenceReport rep;
  rep.n = n;
  rep.k = k;
  rep.free_nedelec = ned->num_free();
  rep.free_lagrange = lag->num_free();

  const SparseMatrix kc = assemble_bilinear(FormKind::CurlCurl, *ned, *ned);
  const SparseMatrix g = discrete_gradient(*lag, *ned);
  const SparseMatrix kg = kc * g;
  const auto lfree = lag->free_dofs();
  const auto nfree = ned->free_dofs();
  const auto& cmask = ned->constrained_mask();
  Eigen::VectorXd colsq = Eigen::VectorXd::Zero(kg.cols());
  for (int i = 0; i < kg.outerSize(); ++i)
    for (SparseMatrix::InnerIterator it(kg, i); it; ++it) colsq[it.col()] += it.value() * it.value();
  for (int j : lfree) rep.max_curl_grad = std::max(rep.max_curl_grad, std::sqrt(colsq[j]));
  for (int i = 0; i < g.outerSize(); ++i) {
    if (!cmask[i]) continue;
    for (SparseMatrix::InnerIterator it(g, i); it; ++it)
      if (!lag->constrained_mask()[it.col()]) rep.max_boundary_leak = std::max(rep.max_boundary_leak, std::abs(it.value()));
  }

  if (!nfree.empty()) {
    const Eigen::MatrixXd kff = detail::restrict_dense(kc, nfree, nfree);
    const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(kff, Eigen::EigenvaluesOnly).eigenvalues();
    const double tol = 1e-9 * std::max(ev.cwiseAbs().maxCoeff(), 1e-300);
    for (Eigen::Index i = 0; i < ev.size(); ++i) rep.nullity += (std::abs(ev[i]) <= tol);
  }
  rep.pass = rep.max_curl_grad <= kCurlGradTol && rep.max_boundary_leak <= 1e-12 && rep.nullity == rep.free_lagrange;
  return rep;
}

struct PoincareReport {
  int n = 0, k = 0;
  double lambda_min = 0.0;  // smallest nonzero generalized eigenvalue of (curl, curl) vs (., .)
  double constant = 0.0;    // 1 / sqrt(lambda_min)
  int kernel_dim = 0;
};

/// Discrete Poincare inequality |v| <= C |curl v| on the complement of the
/// discrete gradients in N_k with homogeneous conditions.
inline PoincareReport poincare_constant(int n, int k) {
  auto mesh = std::make_shared<const Mesh>(build_box_mesh(n));
  const auto ned = build_space(mesh, Family::nedelec(k), true);
  const auto free = ned->free_dofs();
  PoincareReport rep;
  rep.n = n;
  rep.k = k;
  if (free.empty()) throw std::invalid_argument("poincare_constant: no free degrees of freedom");
  const Eigen::MatrixXd kff = detail::restrict_dense(assemble_bilinear(FormKind::CurlCurl, *ned, *ned), free, free);
  const Eigen::MatrixXd mff = detail::restrict_dense(assemble_bilinear(FormKind::MassVec, *ned, *ned), free, free);
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(kff, mff, Eigen::EigenvaluesOnly);
  const Eigen::VectorXd ev = es.eigenvalues();
  const double tol = 1e-9 * ev.cwiseAbs().maxCoeff();
  rep.lambda_min = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (std::abs(ev[i]) <= tol)
      ++rep.kernel_dim;
    else
      rep.lambda_min = std::min(rep.lambda_min, ev[i]);
  }
  rep.constant = 1.0 / std::sqrt(rep.lambda_min);
  return rep;
}

/// min_q max_v (q . B v) / (|v|_U |q|_Q) for B mapping U-space to the dual
/// of the Q-space: square root of the smallest eigenvalue of
/// B U^{-1} B^T q = lambda Q q.
inline double infsup_constant(const Eigen::MatrixXd& b, const Eigen::MatrixXd& norm_u, const Eigen::MatrixXd& norm_q) {
  if (norm_u.rows() != norm_u.cols() || norm_q.rows() != norm_q.cols() || b.rows() != norm_q.rows() ||
      b.cols() != norm_u.rows())
    throw std::invalid_argument("infsup_constant: inconsistent shapes");
  Eigen::LLT<Eigen::MatrixXd> lu(norm_u), lq(norm_q);
  if (lu.info() != Eigen::Success || lq.info() != Eigen::Success)
    throw std::invalid_argument("infsup_constant: norm matrices must be symmetric positive definite");
  const Eigen::MatrixXd s = b * lu.solve(b.transpose());
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (s + s.transpose()), norm_q,
                                                                 Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(es.eigenvalues().minCoeff(), 0.0));
}

inline double infsup_constant(const SparseMatrix& b, const SparseMatrix& norm_u, const SparseMatrix& norm_q) {
  return infsup_constant(Eigen::MatrixXd(b), Eigen::MatrixXd(norm_u), Eigen::MatrixXd(norm_q));
}

/// Stokes inf-sup constant of continuous P_k^3 (homogeneous conditions,
/// H1 seminorm) against continuous P1 pressure on the zero-mean subspace
/// (L2 norm). k = 2 is Taylor-Hood; k = 1 is the unstable equal-order pair.
inline double stokes_infsup(int n, int velocity_degree) {
  auto mesh = std::make_shared<const Mesh>(build_box_mesh(n));
  const auto vel = build_space(mesh, Family::lagrange_vector(velocity_degree), true);
  const auto pre = build_space(mesh, Family::pressure(), false);
  const auto vfree = vel->free_dofs();
  std::vector<int> pall(pre->ndof());
  for (int i = 0; i < pre->ndof(); ++i) pall[i] = i;

  const Eigen::MatrixXd u = detail::restrict_dense(assemble_bilinear(FormKind::GradGrad, *vel, *vel), vfree, vfree);
  const SparseMatrix div = assemble_bilinear(FormKind::PressureDiv, *pre, *vel);
  const Eigen::MatrixXd bt = detail::restrict_dense(div, vfree, pall);  // velocity x pressure
  const Eigen::MatrixXd q = Eigen::MatrixXd(assemble_bilinear(FormKind::MassVec, *pre, *pre));

  // orthonormal basis of {q : (q, 1) = 0}
  const Eigen::VectorXd w = q * Eigen::VectorXd::Ones(pre->ndof());
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(w);
  const Eigen::MatrixXd full = qr.householderQ() * Eigen::MatrixXd::Identity(w.size(), w.size());
  const Eigen::MatrixXd z = full.rightCols(w.size() - 1);
  if (vfree.empty()) return 0.0;
  return infsup_constant(Eigen::MatrixXd(z.transpose() * bt.transpose()), u, Eigen::MatrixXd(z.transpose() * q * z));
}

// ---------------------------------------------------------------------------
// Discrete orthogonality residuals

struct OrthogonalityResiduals {
  double u_grad = 0.0;    // max_h |(u_h, grad h)| over free Lagrange basis functions
  double r_grad = 0.0;    // max_n |(r_h, grad n)|
  double div_phi = 0.0;   // max_q |(div phi_h, q)| over all pressure basis functions
};

namespace detail {

inline double max_free_entry(const Eigen::VectorXd& v, const FESpace& space) {
  double m = 0.0;
  for (int i : space.free_dofs()) m = std::max(m, std::abs(v[i]));
  return m;
}

inline double grad_residual(const FESpace& lag, const FESpace& ned, const Eigen::VectorXd& x) {
  const SparseMatrix g = assemble_bilinear(FormKind::GradScalarHcurl, lag, ned);
  return max_free_entry(g.transpose() * x, lag);
}

inline double div_residual(const FESpace& vel, const FESpace& pre, const Eigen::VectorXd& phi) {
  const SparseMatrix d = assemble_bilinear(FormKind::PressureDiv, pre, vel);
  return (d.transpose() * phi).lpNorm<Eigen::Infinity>();
}

}  // namespace detail

inline OrthogonalityResiduals orthogonality_residuals(const SolutionA& s) {
  return {detail::grad_residual(*s.spaces.m, *s.spaces.u, s.u), detail::grad_residual(*s.spaces.g, *s.spaces.r, s.r),
          detail::div_residual(*s.spaces.phi, *s.spaces.p, s.phi)};
}

inline OrthogonalityResiduals orthogonality_residuals(const SolutionB& s) {
  return {0.0, detail::grad_residual(*s.spaces.m, *s.spaces.r, s.r),
          detail::div_residual(*s.spaces.phi, *s.spaces.p, s.phi)};
}

/// Largest absolute coefficient on a constrained DOF.
inline double max_constrained_value(const FESpace& space, const Eigen::VectorXd& x) {
  double m = 0.0;
  for (int d : space.constrained()) m = std::max(m, std::abs(x[d]));
  return m;
}

// ---------------------------------------------------------------------------
// Convergence study

inline const std::vector<std::string>& rate_columns() {
  static const std::vector<std::string> c{"err_u_curl", "err_r_curl", "err_phi_h1", "err_phi_l2",
                                          "err_p_l2",   "norm_m",     "norm_g"};
  return c;
}

struct RateRow {
  int n = 0;
  double h = 0.0;
  std::vector<double> values;  // in rate_columns() order
  double f_norm = 0.0;
  std::string error;           // non-empty when the solve failed

  double value(const std::string& name) const;
};

inline double RateRow::value(const std::string& name) const {
  const auto& c = rate_columns();
  for (std::size_t i = 0; i < c.size(); ++i)
    if (c[i] == name) return values.at(i);
  throw std::out_of_range("RateRow: unknown column " + name);
}

inline constexpr double kRateFloor = 1e-12;

/// Order between consecutive rows; NaN unless both errors exceed 1e-12.
inline double pair_rate(double e0, double e1, double h0, double h1) {
  if (!(e0 > kRateFloor && e1 > kRateFloor)) return std::numeric_limits<double>::quiet_NaN();
  return std::log(e0 / e1) / std::log(h0 / h1);
}

struct RateTable {
  Problem problem = Problem::A;
  std::vector<RateRow> rows;

  std::vector<double> column(const std::string& name) const {
    std::vector<double> out;
    for (const auto& r : rows) out.push_back(r.value(name));
    return out;
  }
  /// Orders of a column, or of the sum of several columns.
  std::vector<double> rates(const std::vector<std::string>& names) const {
    std::vector<double> out;
    for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
      double e0 = 0.0, e1 = 0.0;
      for (const auto& nm : names) {
        e0 += rows[i].value(nm);
        e1 += rows[i + 1].value(nm);
      }
      out.push_back(pair_rate(e0, e1, rows[i].h, rows[i + 1].h));
    }
    return out;
  }
  std::vector<double> rates(const std::string& name) const { return rates(std::vector<std::string>{name}); }
};

/// Errors of a discrete solution against the manufactured case.
inline RateRow manufactured_errors(const SolutionA& s, const ManufacturedCase& mc, const Mesh& mesh) {
  RateRow row;
  row.n = mesh.n;
  row.h = mesh_size(mesh);
  row.f_norm = field_l2_norm(mesh, mc.f_exact(), 12);
  const ExactField u{mc.u_exact(), {}, mc.curl_u_exact()};
  const ExactField r{mc.r_exact(), {}, mc.curl_r_exact()};
  const ExactField phi{mc.phi_exact(), mc.grad_phi_exact(), {}};
  row.values = {error_norm(*s.spaces.u, s.u, u, Norm::Hcurl),
                error_norm(*s.spaces.r, s.r, r, Norm::Hcurl),
                error_norm(*s.spaces.phi, s.phi, phi, Norm::H1),
                error_norm(*s.spaces.phi, s.phi, phi, Norm::L2),
                error_norm(*s.spaces.p, s.p, ExactField::zero(), Norm::L2),
                error_norm(*s.spaces.m, s.m, ExactField::zero(), Norm::H1),
                error_norm(*s.spaces.g, s.g, ExactField::zero(), Norm::H1)};
  return row;
}

inline RateRow manufactured_errors(const SolutionB& s, const ManufacturedCase& mc, const Mesh& mesh) {
  RateRow row;
  row.n = mesh.n;
  row.h = mesh_size(mesh);
  row.f_norm = field_l2_norm(mesh, mc.f_exact(), 12);
  const ExactField u{mc.u_exact(), {}, mc.curl_u_exact()};
  const ExactField r{mc.r_exact(), {}, mc.curl_r_exact()};
  const ExactField phi{mc.phi_exact(), mc.grad_phi_exact(), {}};
  row.values = {error_norm(*s.spaces.u, s.u, u, Norm::Hcurl),
                error_norm(*s.spaces.r, s.r, r, Norm::Hcurl),
                error_norm(*s.spaces.phi, s.phi, phi, Norm::H1),
                error_norm(*s.spaces.phi, s.phi, phi, Norm::L2),
                error_norm(*s.spaces.p, s.p, ExactField::zero(), Norm::L2),
                error_norm(*s.spaces.m, s.m, ExactField::zero(), Norm::H1),
                std::numeric_limits<double>::quiet_NaN()};
  return row;
}

inline SolveOptions manufactured_options(const ManufacturedCase& mc, SolveOptions opt = {}) {
  if (opt.load_quadrature_degree == 0) opt.load_quadrature_degree = mc.load_quadrature_degree();
  return opt;
}

/// Solve the manufactured case of (A) with the standard quarto on the n^3 cube.
inline RateRow measure_problem_A(int n, const ManufacturedCase& mc, const SolveOptions& opt = {}) {
  auto mesh = std::make_shared<const Mesh>(build_box_mesh(n));
  return manufactured_errors(solve_problem_A(mesh, QuartoA::standard(), mc.f_exact(), manufactured_options(mc, opt)),
                             mc, *mesh);
}

inline RateRow measure_problem_B(int n, const ManufacturedCase& mc, const SolveOptions& opt = {}) {
  auto mesh = std::make_shared<const Mesh>(build_box_mesh(n));
  return manufactured_errors(solve_problem_B(mesh, QuartoB::standard(), mc.f_exact(), manufactured_options(mc, opt)),
                             mc, *mesh);
}

/// Solve the manufactured case on each n and tabulate errors. A failed solve
/// leaves NaN errors and records the message in the row.
inline RateTable run_convergence_study(Problem problem, const std::vector<int>& ns, const SolveOptions& opt = {}) {
  if (ns.empty()) throw std::invalid_argument("run_convergence_study: empty list of subdivisions");
  for (std::size_t i = 0; i < ns.size(); ++i)
    if (ns[i] < 1 || (i > 0 && ns[i] <= ns[i - 1]))
      throw std::invalid_argument("run_convergence_study: subdivisions must be positive and strictly increasing");
  const ManufacturedCase mc = manufactured_solution(problem);
  RateTable t;
  t.problem = problem;
  for (int n : ns) {
    try {
      t.rows.push_back(problem == Problem::A ? measure_problem_A(n, mc, opt) : measure_problem_B(n, mc, opt));
    } catch (const SolveError& e) {
      RateRow row;
      row.n = n;
      row.h = mesh_size(build_box_mesh(n));
      row.values.assign(rate_columns().size(), std::numeric_limits<double>::quiet_NaN());
      row.error = e.what();
      t.rows.push_back(std::move(row));
    }
  }
  return t;
}

namespace detail {

inline void write_number(std::ostream& os, double v) {
  if (std::isnan(v))
    os << "nan";
  else
    os << v;
}

}  // namespace detail

/// CSV: header, one row per n, then a "#rates" block with the orders
/// between consecutive rows.
inline void write_rate_table_csv(std::ostream& os, const RateTable& t) {
  const auto old = os.precision(17);
  const auto& cols = rate_columns();
  os << "n,h";
  for (const auto& c : cols) os << ',' << c;
  os << '\n';
  for (const auto& r : t.rows) {
    os << r.n << ',';
    detail::write_number(os, r.h);
    for (double v : r.values) {
      os << ',';
      detail::write_number(os, v);
    }
    os << '\n';
  }
  for (const auto& r : t.rows)
    if (!r.error.empty()) os << "#error n=" << r.n << ": " << r.error << '\n';
  os << "#rates\n";
  os << "n_coarse,n_fine";
  for (const auto& c : cols) os << ',' << c;
  os << '\n';
  for (std::size_t i = 0; i + 1 < t.rows.size(); ++i) {
    os << t.rows[i].n << ',' << t.rows[i + 1].n;
    for (const auto& c : cols) {
      os << ',';
      detail::write_number(os, pair_rate(t.rows[i].value(c), t.rows[i + 1].value(c), t.rows[i].h, t.rows[i + 1].h));
    }
    os << '\n';
  }
  os.precision(old);
}

}  // namespace quadcurl
