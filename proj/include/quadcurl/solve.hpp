// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <map>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "quadcurl/linear_solver.hpp"
#include "quadcurl/systems.hpp"

namespace quadcurl {

struct SolveOptions {
  double rel_tol = kDefaultRelTol;
  int load_quadrature_degree = 0;  // 0: module default 2k + 2
};

/// Discrete solution of problem (A). The spaces are shared with the systems
/// that produced the coefficients.
struct SolutionA {
  SpacesA spaces;
  Eigen::VectorXd m, u, phi, p, r, g;
  std::vector<double> residuals;  // one entry per stage (a single entry for the monolithic path)
};

struct SolutionB {
  SpacesB spaces;
  Eigen::VectorXd m, u, phi, r, p;
  double residual = 0.0;
};

/// Thrown when one stage of a multi-stage solve fails.
class StageError : public SolveError {
 public:
  StageError(int stage, const SolveError& e)
      : SolveError("stage " + std::to_string(stage) + ": " + e.what(), e.residual()), stage_(stage) {}
  int stage() const { return stage_; }

 private:
  int stage_;
};

namespace detail {

inline std::map<std::string, Eigen::VectorXd> solve_block_system(const BlockSystem& sys, double rel_tol,
                                                                  double& residual) {
  const BlockSystem c = apply_constraints(sys);
  LinearSolveResult res = solve_linear_checked(c.matrix, c.vector, rel_tol);
  residual = res.relative_residual;
  return sys.split(res.x.head(sys.size()));
}

}  // namespace detail

/// Sequential solve of (A): (r, g), then (phi, p) from curl r, then (u, m) from phi.
inline SolutionA solve_problem_A(std::shared_ptr<const Mesh> mesh, const QuartoA& quarto, const VectorField& f,
                                 const SolveOptions& opt = {}) {
  SubsystemsA sub = build_subsystems_A(std::move(mesh), quarto, f, opt.load_quadrature_degree);
  SolutionA sol;
  sol.spaces = sub.spaces;
  sol.residuals.assign(3, 0.0);
  auto run = [&](int stage) {
    try {
      return detail::solve_block_system(sub.stage[stage], opt.rel_tol, sol.residuals[stage]);
    } catch (const SolveError& e) {
      throw StageError(stage + 1, e);
    }
  };
  auto s1 = run(0);
  sol.r = s1["r"];
  sol.g = s1["g"];
  sub.stage[1].bind_input("r", sol.r);
  auto s2 = run(1);
  sol.phi = s2["phi"];
  sol.p = s2["p"];
  sub.stage[2].bind_input("phi", sol.phi);
  auto s3 = run(2);
  sol.u = s3["u"];
  sol.m = s3["m"];
  return sol;
}

/// One solve of the six-field system; requires the symmetric quarto.
inline SolutionA solve_problem_A_monolithic(std::shared_ptr<const Mesh> mesh, const QuartoA& quarto,
                                            const VectorField& f, const SolveOptions& opt = {}) {
  const BlockSystem sys = build_system_A_monolithic(mesh, quarto, f, opt.load_quadrature_degree);
  SolutionA sol;
  sol.residuals.assign(1, 0.0);
  auto x = detail::solve_block_system(sys, opt.rel_tol, sol.residuals[0]);
  sol.spaces.m = sys.field("m").space;
  sol.spaces.u = sys.field("u").space;
  sol.spaces.phi = sys.field("phi").space;
  sol.spaces.p = sys.field("p").space;
  sol.spaces.r = sys.field("r").space;
  sol.spaces.g = sys.field("g").space;
  sol.m = x["m"];
  sol.u = x["u"];
  sol.phi = x["phi"];
  sol.p = x["p"];
  sol.r = x["r"];
  sol.g = x["g"];
  return sol;
}

inline SolutionB solve_problem_B(std::shared_ptr<const Mesh> mesh, const QuartoB& quarto, const VectorField& f,
                                 const SolveOptions& opt = {}) {
  const BlockSystem sys = build_system_B(std::move(mesh), quarto, f, opt.load_quadrature_degree);
  SolutionB sol;
  auto x = detail::solve_block_system(sys, opt.rel_tol, sol.residual);
  sol.spaces.m = sys.field("m").space;
  sol.spaces.u = sys.field("u").space;
  sol.spaces.phi = sys.field("phi").space;
  sol.spaces.r = sys.field("r").space;
  sol.spaces.p = sys.field("p").space;
  sol.m = x["m"];
  sol.u = x["u"];
  sol.phi = x["phi"];
  sol.r = x["r"];
  sol.p = x["p"];
  return sol;
}

/// Headered text columns: a "name ndof" line followed by one value per line.
inline void write_field(std::ostream& os, const std::string& name, const Eigen::VectorXd& v) {
  const auto old = os.precision(17);
  os << name << ' ' << v.size() << '\n';
  for (Eigen::Index i = 0; i < v.size(); ++i) os << v[i] << '\n';
  os.precision(old);
}

inline void write_solution(std::ostream& os, const SolutionA& s) {
  write_field(os, "m", s.m);
  write_field(os, "u", s.u);
  write_field(os, "phi", s.phi);
  write_field(os, "p", s.p);
  write_field(os, "r", s.r);
  write_field(os, "g", s.g);
}

inline void write_solution(std::ostream& os, const SolutionB& s) {
  write_field(os, "m", s.m);
  write_field(os, "u", s.u);
  write_field(os, "phi", s.phi);
  write_field(os, "r", s.r);
  write_field(os, "p", s.p);
}

}  // namespace quadcurl
