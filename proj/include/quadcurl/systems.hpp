// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <memory>
#include <stdexcept>

#include "quadcurl/block_system.hpp"

namespace quadcurl {

/// Space choices for problem (A). The "a" pair (scalar Lagrange, Nedelec)
/// carries (m, u), the "b" pair carries (g, r); phi lives in vector Lagrange
/// of `vector_degree` and p in continuous P1 with zero mean. Each pair uses
/// equal Lagrange and Nedelec degree so that the discrete gradient of the
/// scalar space is exactly the curl-free part of the edge space.
struct QuartoA {
  int degree_a = 2;
  int degree_b = 1;
  int vector_degree = 2;

  /// N2/P2 for (u, m), N1/P1 for (r, g), Taylor-Hood P2^3/P1 for (phi, p).
  static QuartoA standard() { return {2, 1, 2}; }
  static QuartoA symmetric(int k) { return {k, k, 2}; }
  bool is_symmetric() const { return degree_a == degree_b; }
};

/// Space choices for problem (B): one Nedelec/Lagrange pair for (u, r, m),
/// vector Lagrange for phi and P1 zero-mean pressure.
struct QuartoB {
  int degree = 2;
  int vector_degree = 2;

  static QuartoB standard() { return {2, 2}; }
};

/// The discrete spaces of one problem on one mesh.
struct SpacesA {
  std::shared_ptr<const FESpace> m, u, phi, p, r, g;
};

struct SpacesB {
  std::shared_ptr<const FESpace> m, u, phi, r, p;
};

inline SpacesA make_spaces(std::shared_ptr<const Mesh> mesh, const QuartoA& q) {
  SpacesA s;
  s.m = build_space(mesh, Family::lagrange(q.degree_a), true);
  s.u = build_space(mesh, Family::nedelec(q.degree_a), true);
  s.phi = build_space(mesh, Family::lagrange_vector(q.vector_degree), true);
  s.p = build_space(mesh, Family::pressure(), false);
  if (q.degree_b == q.degree_a) {
    s.r = s.u;
    s.g = s.m;
  } else {
    s.r = build_space(mesh, Family::nedelec(q.degree_b), true);
    s.g = build_space(mesh, Family::lagrange(q.degree_b), true);
  }
  return s;
}

inline SpacesB make_spaces(std::shared_ptr<const Mesh> mesh, const QuartoB& q) {
  SpacesB s;
  s.m = build_space(mesh, Family::lagrange(q.degree), true);
  s.u = build_space(mesh, Family::nedelec(q.degree), true);
  s.phi = build_space(mesh, Family::lagrange_vector(q.vector_degree), true);
  s.r = s.u;
  s.p = build_space(mesh, Family::pressure(), false);
  return s;
}

/// Stokes pair for phi and p: (grad phi, grad psi) + (p, div psi) and its
/// transposed divergence row, pressure mean fixed by a bordered row.
inline void add_stokes_blocks(BlockSystem& sys, const FESpace& phi, const FESpace& p) {
  const SparseMatrix lap = assemble_bilinear(FormKind::GradGrad, phi, phi);
  const SparseMatrix div = assemble_bilinear(FormKind::PressureDiv, p, phi);
  sys.add_block("phi", "phi", lap);
  sys.add_block("phi", "p", div);
  sys.add_block("p", "phi", SparseMatrix(div.transpose()));
  sys.set_zero_mean("p");
}

/// The three stages of the sequential solve of (A):
///   1. (r, g):   (curl r, curl v) - (grad g, v) = -(f, v);  -(grad n, r) = 0
///   2. (phi, p): Stokes with load -(curl r, psi), input "r"
///   3. (u, m):   (curl u, curl s) - (grad m, s) = (phi, curl s);  -(grad h, u) = 0, input "phi"
/// The constraint rows of stages 1 and 3 are negated so that each stage
/// matrix is symmetric; the solution is unchanged.
struct SubsystemsA {
  SpacesA spaces;
  std::array<BlockSystem, 3> stage;
};

inline SubsystemsA build_subsystems_A(std::shared_ptr<const Mesh> mesh, const QuartoA& quarto, const VectorField& f,
                                      int load_quad_degree = 0) {
  SubsystemsA out;
  out.spaces = make_spaces(mesh, quarto);
  const auto& s = out.spaces;

  {
    BlockSystem& b = out.stage[0];
    b.add_field("r", s.r);
    b.add_field("g", s.g);
    const SparseMatrix grad = assemble_bilinear(FormKind::GradScalarHcurl, *s.g, *s.r);
    b.add_block("r", "r", assemble_bilinear(FormKind::CurlCurl, *s.r, *s.r));
    b.add_block("r", "g", grad, -1.0);
    b.add_block("g", "r", SparseMatrix(grad.transpose()), -1.0);
    b.add_rhs("r", assemble_load(*s.r, f, load_quad_degree), -1.0);
  }
  {
    BlockSystem& b = out.stage[1];
    b.add_field("phi", s.phi);
    b.add_field("p", s.p);
    add_stokes_blocks(b, *s.phi, *s.p);
    b.add_input("phi", "r", assemble_bilinear(FormKind::CurlHcurlVsVec, *s.r, *s.phi), -1.0);
  }
  {
    BlockSystem& b = out.stage[2];
    b.add_field("u", s.u);
    b.add_field("m", s.m);
    const SparseMatrix grad = assemble_bilinear(FormKind::GradScalarHcurl, *s.m, *s.u);
    b.add_block("u", "u", assemble_bilinear(FormKind::CurlCurl, *s.u, *s.u));
    b.add_block("u", "m", grad, -1.0);
    b.add_block("m", "u", SparseMatrix(grad.transpose()), -1.0);
    b.add_input("u", "phi", assemble_bilinear(FormKind::VecVsCurl, *s.phi, *s.u), 1.0);
  }
  return out;
}

/// Six-field system of (A) for a symmetric quarto, fields (m, u, phi, p, r, g)
/// with test functions (n, v, psi, q, s, h) in the same slots:
///   n:   (r, grad n) = 0
///   v:  -(curl r, curl v) + (grad g, v) = (f, v)
///   psi: (grad phi, grad psi) + (p, div psi) + (curl r, psi) = 0
///   q:   (div phi, q) = 0
///   s:   (grad m, s) - (curl u, curl s) + (phi, curl s) = 0
///   h:   (u, grad h) = 0
/// Row v is the negation of the first row of stage 1 of the sequential path.
inline BlockSystem build_system_A_monolithic(std::shared_ptr<const Mesh> mesh, const QuartoA& quarto,
                                             const VectorField& f, int load_quad_degree = 0) {
  if (!quarto.is_symmetric())
    throw std::invalid_argument("build_system_A_monolithic: requires identical a and b spaces");
  const SpacesA s = make_spaces(mesh, quarto);
  BlockSystem b;
  b.add_field("m", s.m);
  b.add_field("u", s.u);
  b.add_field("phi", s.phi);
  b.add_field("p", s.p);
  b.add_field("r", s.r);
  b.add_field("g", s.g);

  const SparseMatrix grad = assemble_bilinear(FormKind::GradScalarHcurl, *s.m, *s.u);
  const SparseMatrix grad_t = grad.transpose();
  const SparseMatrix curlcurl = assemble_bilinear(FormKind::CurlCurl, *s.u, *s.u);

  b.add_block("m", "r", grad_t);
  b.add_block("u", "r", curlcurl, -1.0);
  b.add_block("u", "g", grad);
  add_stokes_blocks(b, *s.phi, *s.p);
  b.add_block("phi", "r", assemble_bilinear(FormKind::CurlHcurlVsVec, *s.r, *s.phi));
  b.add_block("r", "m", grad);
  b.add_block("r", "u", curlcurl, -1.0);
  b.add_block("r", "phi", assemble_bilinear(FormKind::VecVsCurl, *s.phi, *s.r));
  b.add_block("g", "u", grad_t);
  b.add_rhs("u", assemble_load(*s.u, f, load_quad_degree));
  return b;
}

/// Five-field system of (B), fields (m, u, phi, r, p), tests (n, v, psi, s, q):
///   n:   (r, grad n) = 0
///   v:   (u, v) - (curl r, curl v) = (f, v)
///   psi: (grad phi, grad psi) + (curl r, psi) + (p, div psi) = 0
///   s:   (grad m, s) - (curl u, curl s) + (phi, curl s) = 0
///   q:   (div phi, q) = 0
inline BlockSystem build_system_B(std::shared_ptr<const Mesh> mesh, const QuartoB& quarto, const VectorField& f,
                                  int load_quad_degree = 0) {
  const SpacesB s = make_spaces(mesh, quarto);
  BlockSystem b;
  b.add_field("m", s.m);
  b.add_field("u", s.u);
  b.add_field("phi", s.phi);
  b.add_field("r", s.r);
  b.add_field("p", s.p);

  const SparseMatrix grad = assemble_bilinear(FormKind::GradScalarHcurl, *s.m, *s.u);
  const SparseMatrix curlcurl = assemble_bilinear(FormKind::CurlCurl, *s.u, *s.u);

  b.add_block("m", "r", SparseMatrix(grad.transpose()));
  b.add_block("u", "u", assemble_bilinear(FormKind::MassVec, *s.u, *s.u));
  b.add_block("u", "r", curlcurl, -1.0);
  add_stokes_blocks(b, *s.phi, *s.p);
  b.add_block("phi", "r", assemble_bilinear(FormKind::CurlHcurlVsVec, *s.r, *s.phi));
  b.add_block("r", "m", grad);
  b.add_block("r", "u", curlcurl, -1.0);
  b.add_block("r", "phi", assemble_bilinear(FormKind::VecVsCurl, *s.phi, *s.r));
  b.add_rhs("u", assemble_load(*s.u, f, load_quad_degree));
  return b;
}

}  // namespace quadcurl
