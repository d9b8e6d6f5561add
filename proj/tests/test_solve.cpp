// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <sstream>

#include "quadcurl/manufactured.hpp"
#include "quadcurl/solve.hpp"
#include "quadcurl/verify.hpp"

namespace quadcurl {
namespace {

std::shared_ptr<const Mesh> cube(int n) { return std::make_shared<const Mesh>(build_box_mesh(n)); }

SparseMatrix dense_to_sparse(const Eigen::MatrixXd& d) { return d.sparseView(); }

double rel_diff(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double scale = std::max(a.norm(), b.norm());
  return scale == 0.0 ? 0.0 : (a - b).norm() / scale;
}

VectorField zero_field() {
  return [](const Vec3&) { return Vec3::Zero().eval(); };
}

SolveOptions exact_load(const ManufacturedCase& mc) {
  SolveOptions o;
  o.load_quadrature_degree = mc.load_quadrature_degree();
  return o;
}

TEST(LinearSolver, Identity) {
  Eigen::MatrixXd id = Eigen::MatrixXd::Identity(4, 4);
  const Eigen::VectorXd b = Eigen::VectorXd::LinSpaced(4, -1.0, 2.0);
  EXPECT_LE((solve_linear(dense_to_sparse(id), b) - b).norm(), 1e-15);
}

TEST(LinearSolver, TwoByTwo) {
  Eigen::MatrixXd a(2, 2);
  a << 2, 1, 1, 2;
  const LinearSolveResult r = solve_linear_checked(dense_to_sparse(a), Eigen::Vector2d(3, 3));
  EXPECT_NEAR(r.x[0], 1.0, 1e-14);
  EXPECT_NEAR(r.x[1], 1.0, 1e-14);
  EXPECT_LE(r.relative_residual, kDefaultRelTol);
}

TEST(LinearSolver, ZeroRightHandSide) {
  Eigen::MatrixXd a(2, 2);
  a << 2, 1, 1, 2;
  EXPECT_EQ(solve_linear(dense_to_sparse(a), Eigen::Vector2d::Zero()).norm(), 0.0);
}

TEST(LinearSolver, RejectsBadShapesAndSingularMatrices) {
  EXPECT_THROW(solve_linear(SparseMatrix(2, 3), Eigen::Vector2d(1, 1)), std::invalid_argument);
  EXPECT_THROW(solve_linear(dense_to_sparse(Eigen::MatrixXd::Identity(2, 2)), Eigen::Vector3d(1, 1, 1)),
               std::invalid_argument);
  Eigen::MatrixXd s(2, 2);
  s << 1, 2, 2, 4;
  try {
    solve_linear(dense_to_sparse(s), Eigen::Vector2d(1, 0));
    FAIL() << "singular system accepted";
  } catch (const SolveError& e) {
    EXPECT_GT(e.residual(), kDefaultRelTol);
  }
}

TEST(LinearSolver, RandomNonsymmetricSystems) {
  std::mt19937 rng(5);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 5; ++trial) {
    const int n = 20 + 7 * trial;
    Eigen::MatrixXd a(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) a(i, j) = (std::abs(i - j) <= 2 || (i * j) % 11 == 3) ? g(rng) : 0.0;
    a.diagonal().array() += 8.0;
    Eigen::VectorXd x(n);
    for (int i = 0; i < n; ++i) x[i] = g(rng);
    const Eigen::VectorXd b = a * x;
    const LinearSolveResult r = solve_linear_checked(dense_to_sparse(a), b);
    EXPECT_LE((a * r.x - b).norm(), kDefaultRelTol * b.norm());
    EXPECT_LE(rel_diff(r.x, x), 1e-12);
  }
}

TEST(SolveA, ZeroLoadGivesZero) {
  const SolutionA s = solve_problem_A(cube(2), QuartoA::standard(), zero_field());
  for (const Eigen::VectorXd* v : {&s.m, &s.u, &s.phi, &s.p, &s.r, &s.g}) EXPECT_EQ(v->norm(), 0.0);
  const SolutionA mono = solve_problem_A_monolithic(cube(1), QuartoA::symmetric(1), zero_field());
  EXPECT_EQ(mono.u.norm(), 0.0);
  const SolutionB b = solve_problem_B(cube(2), QuartoB::standard(), zero_field());
  for (const Eigen::VectorXd* v : {&b.m, &b.u, &b.phi, &b.r, &b.p}) EXPECT_EQ(v->norm(), 0.0);
}

class ManufacturedA : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    mc_ = new ManufacturedCase(manufactured_solution(Problem::A));
    mesh_ = cube(2);
    sol_ = new SolutionA(solve_problem_A(mesh_, QuartoA::standard(), mc_->f_exact(), exact_load(*mc_)));
    fnorm_ = field_l2_norm(*mesh_, mc_->f_exact(), 12);
  }
  static void TearDownTestSuite() {
    delete sol_;
    delete mc_;
    mesh_.reset();
  }
  static inline ManufacturedCase* mc_ = nullptr;
  static inline std::shared_ptr<const Mesh> mesh_;
  static inline SolutionA* sol_ = nullptr;
  static inline double fnorm_ = 0.0;
};

TEST_F(ManufacturedA, StageResidualsWithinTolerance) {
  ASSERT_EQ(sol_->residuals.size(), 3u);
  for (double r : sol_->residuals) EXPECT_LE(r, kDefaultRelTol);
}

TEST_F(ManufacturedA, MultipliersVanish) {
  const ExactField zero = ExactField::zero();
  EXPECT_LE(error_norm(*sol_->spaces.g, sol_->g, zero, Norm::H1), 1e-8 * fnorm_);
  EXPECT_LE(error_norm(*sol_->spaces.m, sol_->m, zero, Norm::H1), 1e-8 * fnorm_);
}

TEST_F(ManufacturedA, ConstrainedDofsAreExactlyZero) {
  const SpacesA& s = sol_->spaces;
  EXPECT_EQ(max_constrained_value(*s.m, sol_->m), 0.0);
  EXPECT_EQ(max_constrained_value(*s.u, sol_->u), 0.0);
  EXPECT_EQ(max_constrained_value(*s.phi, sol_->phi), 0.0);
  EXPECT_EQ(max_constrained_value(*s.r, sol_->r), 0.0);
  EXPECT_EQ(max_constrained_value(*s.g, sol_->g), 0.0);
}

TEST_F(ManufacturedA, PressureHasZeroMean) {
  const double pn = error_norm(*sol_->spaces.p, sol_->p, ExactField::zero(), Norm::L2);
  EXPECT_GT(pn, 0.0);
  EXPECT_LE(std::abs(integral(*sol_->spaces.p, sol_->p)), 1e-10 * pn);
}

TEST_F(ManufacturedA, DiscreteOrthogonality) {
  const OrthogonalityResiduals o = orthogonality_residuals(*sol_);
  EXPECT_LE(o.u_grad, 1e-9 * fnorm_);
  EXPECT_LE(o.r_grad, 1e-9 * fnorm_);
  EXPECT_LE(o.div_phi, 1e-9 * fnorm_);
}

TEST_F(ManufacturedA, StageTwoIgnoresDiscreteGradientsExceptThroughPressure) {
  // curl r_h -> curl r_h + grad s shifts p_h by s minus its mean and leaves phi_h alone.
  SubsystemsA sub = build_subsystems_A(mesh_, QuartoA::standard(), mc_->f_exact(), mc_->load_quadrature_degree());
  sub.stage[1].bind_input("r", sol_->r);
  const FESpace& pspace = *sol_->spaces.p;
  Eigen::VectorXd s(pspace.ndof());
  std::mt19937 rng(9);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  for (int i = 0; i < s.size(); ++i) s[i] = u(rng);
  const SparseMatrix div = assemble_bilinear(FormKind::PressureDiv, pspace, *sol_->spaces.phi);
  sub.stage[1].add_rhs("phi", div * s);  // -(grad s, psi) = (s, div psi) on H^1_0
  double res = 0.0;
  auto x = detail::solve_block_system(sub.stage[1], kDefaultRelTol, res);
  EXPECT_LE(rel_diff(x["phi"], sol_->phi), 1e-9);
  const double mean = integral(pspace, s) / integral(pspace, Eigen::VectorXd::Ones(pspace.ndof()));
  const Eigen::VectorXd expect = sol_->p + (s.array() - mean).matrix();
  EXPECT_LE(rel_diff(x["p"], expect), 1e-9);
}

TEST(SolveA, SequentialAndMonolithicAgree) {
  const ManufacturedCase mc = manufactured_solution(Problem::A);
  for (int k : {1, 2}) {
    const SolutionA seq = solve_problem_A(cube(2), QuartoA::symmetric(k), mc.f_exact(), exact_load(mc));
    const SolutionA mono = solve_problem_A_monolithic(cube(2), QuartoA::symmetric(k), mc.f_exact(), exact_load(mc));
    EXPECT_LE(rel_diff(seq.u, mono.u), 1e-8) << "k=" << k;
    EXPECT_LE(rel_diff(seq.phi, mono.phi), 1e-8);
    EXPECT_LE(rel_diff(seq.p, mono.p), 1e-8);
    EXPECT_LE(rel_diff(seq.r, mono.r), 1e-8);
    const double fn = field_l2_norm(build_box_mesh(2), mc.f_exact(), 12);
    EXPECT_LE((seq.m - mono.m).norm(), 1e-8 * fn);
    EXPECT_LE((seq.g - mono.g).norm(), 1e-8 * fn);
  }
}

TEST(SolveA, MonolithicRejectsMixedDegrees) {
  EXPECT_THROW(solve_problem_A_monolithic(cube(1), QuartoA::standard(), zero_field()), std::invalid_argument);
}

TEST(SolveA, FailingStageReportsItsIndex) {
  const ManufacturedCase mc = manufactured_solution(Problem::A);
  SolveOptions opt = exact_load(mc);
  opt.rel_tol = 1e-30;
  try {
    solve_problem_A(cube(2), QuartoA::standard(), mc.f_exact(), opt);
    FAIL() << "unreachable tolerance accepted";
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), 1);
    EXPECT_GT(e.residual(), 0.0);
    EXPECT_NE(std::string(e.what()).find("stage 1"), std::string::npos);
  }
}

TEST(SolveB, SingularSystemIsRejected) {
  // One cube: 3 free Taylor-Hood velocity DOFs cannot control a 7-dimensional zero-mean pressure.
  const ManufacturedCase mc = manufactured_solution(Problem::B);
  EXPECT_THROW(solve_problem_B(cube(1), QuartoB::standard(), mc.f_exact()), SolveError);
}

TEST(SolveA, InvariantUnderCellPermutation) {
  const ManufacturedCase mc = manufactured_solution(Problem::A);
  const Mesh base = build_box_mesh(2);
  std::vector<int> perm(base.num_cells());
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937 rng(21);
  std::shuffle(perm.begin(), perm.end(), rng);
  const auto a = solve_problem_A(std::make_shared<const Mesh>(base), QuartoA::standard(), mc.f_exact(), exact_load(mc));
  const auto b = solve_problem_A(std::make_shared<const Mesh>(permute_cells(base, perm)), QuartoA::standard(),
                                 mc.f_exact(), exact_load(mc));
  EXPECT_LE(rel_diff(a.u, b.u), 1e-10);
  EXPECT_LE(rel_diff(a.phi, b.phi), 1e-10);
  EXPECT_LE(rel_diff(a.p, b.p), 1e-10);
  EXPECT_LE(rel_diff(a.r, b.r), 1e-10);
}

TEST(SolveB, ManufacturedInvariants) {
  const ManufacturedCase mc = manufactured_solution(Problem::B);
  auto mesh = cube(2);
  const SolutionB s = solve_problem_B(mesh, QuartoB::standard(), mc.f_exact(), exact_load(mc));
  const double fn = field_l2_norm(*mesh, mc.f_exact(), 12);
  EXPECT_LE(s.residual, kDefaultRelTol);
  EXPECT_LE(error_norm(*s.spaces.m, s.m, ExactField::zero(), Norm::H1), 1e-8 * fn);
  const OrthogonalityResiduals o = orthogonality_residuals(s);
  EXPECT_LE(o.r_grad, 1e-9 * fn);
  EXPECT_LE(o.div_phi, 1e-9 * fn);
  EXPECT_EQ(max_constrained_value(*s.spaces.u, s.u), 0.0);
  EXPECT_EQ(max_constrained_value(*s.spaces.phi, s.phi), 0.0);
  EXPECT_EQ(max_constrained_value(*s.spaces.m, s.m), 0.0);
  const double pn = error_norm(*s.spaces.p, s.p, ExactField::zero(), Norm::L2);
  EXPECT_LE(std::abs(integral(*s.spaces.p, s.p)), 1e-10 * pn);
}

TEST(SolveB, AcceptsLoadsWithDivergence) {
  // (grad psi) for psi = xyz(1-x)(1-y)(1-z) is not divergence free; m_h still vanishes
  auto mesh = cube(2);
  const VectorField f = [](const Vec3& x) {
    const double a = x[0] * (1 - x[0]), b = x[1] * (1 - x[1]), c = x[2] * (1 - x[2]);
    return Vec3((1 - 2 * x[0]) * b * c, a * (1 - 2 * x[1]) * c, a * b * (1 - 2 * x[2]));
  };
  const SolutionB s = solve_problem_B(mesh, QuartoB::standard(), f);
  EXPECT_GT(s.u.norm(), 0.0);
  EXPECT_LE(error_norm(*s.spaces.m, s.m, ExactField::zero(), Norm::H1), 1e-8 * field_l2_norm(*mesh, f, 8));
}

TEST(SolutionExport, HeaderedColumns) {
  const SolutionB s = solve_problem_B(cube(1), QuartoB::standard(), zero_field());
  std::ostringstream os;
  write_solution(os, s);
  std::istringstream is(os.str());
  for (const char* name : {"m", "u", "phi", "r", "p"}) {
    std::string got;
    int ndof = -1;
    is >> got >> ndof;
    EXPECT_EQ(got, name);
    ASSERT_GE(ndof, 0);
    for (int i = 0; i < ndof; ++i) {
      double v = 1.0;
      is >> v;
      EXPECT_EQ(v, 0.0);
    }
  }
}

}  // namespace
}  // namespace quadcurl
