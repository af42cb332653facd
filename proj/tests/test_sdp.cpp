#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "swc/lmi.hpp"
#include "swc/solver.hpp"

#include <cmath>

using namespace swc::sdp;

namespace {

LmiBlock scalar_block(int var, double coeff, double constant,
                      BlockSense sense = BlockSense::PSD) {
  LmiBlock b;
  b.dim = 1;
  b.constant = Matrix::Constant(1, 1, constant);
  b.coeffs.emplace_back(var, Matrix::Constant(1, 1, coeff));
  b.sense = sense;
  return b;
}

SdpProblem scalar_lower_bound() {
  // min x s.t. x >= 1
  SdpProblem p;
  p.n_vars = 1;
  p.objective = Vector::Ones(1);
  p.blocks.push_back(scalar_block(0, 1.0, -1.0));
  return p;
}

// bounded-real certificate for xdot = -x + w, z = x:
// [[-2q, 1, q], [1, -1, 0], [q, 0, -g2]] <= 0 together with q >= tiny
SdpProblem brl_first_order() {
  SdpProblem p;
  p.n_vars = 2; // g2, q
  p.objective = Vector::Zero(2);
  p.objective(0) = 1.0;

  LmiBlock big;
  big.dim = 3;
  big.constant = Matrix::Zero(3, 3);
  big.constant(0, 1) = 1.0;
  big.constant(1, 0) = 1.0;
  big.constant(1, 1) = -1.0;
  Matrix cq = Matrix::Zero(3, 3);
  cq(0, 0) = -2.0;
  cq(0, 2) = 1.0;
  cq(2, 0) = 1.0;
  Matrix cg = Matrix::Zero(3, 3);
  cg(2, 2) = -1.0;
  big.coeffs.emplace_back(1, cq);
  big.coeffs.emplace_back(0, cg);
  big.sense = BlockSense::NSD;
  p.blocks.push_back(big);

  p.blocks.push_back(scalar_block(1, 1.0, -1e-9)); // q positive
  return p;
}

} // namespace

TEST_CASE("scalar lower bound solves to the boundary") {
  auto sol = solve(scalar_lower_bound());
  REQUIRE(sol.status == SolveStatus::Optimal);
  CHECK(sol.values(0) == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(sol.objective_value == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(sol.margin >= -1e-7);
}

TEST_CASE("analytic H-infinity value through the bounded-real certificate") {
  auto sol = solve(brl_first_order());
  REQUIRE(sol.status == SolveStatus::Optimal);
  // the L2 gain of 1/(s+1) is exactly 1
  CHECK(sol.values(0) == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("contradictory scalar constraints are reported infeasible") {
  SdpProblem p;
  p.n_vars = 1;
  p.objective = Vector::Ones(1);
  p.blocks.push_back(scalar_block(0, 1.0, -1.0));  // x >= 1
  p.blocks.push_back(scalar_block(0, -1.0, 0.0));  // -x >= 0
  auto sol = solve(p);
  CHECK(sol.status == SolveStatus::Infeasible);
}

TEST_CASE("check_point margins") {
  SdpProblem p;
  p.n_vars = 1;
  p.objective = Vector::Zero(1);
  p.blocks.push_back(scalar_block(0, 1.0, 0.0)); // x >= 0

  Vector at = Vector::Zero(1);
  auto r0 = check_point(p, at);
  CHECK(r0.feasible);
  CHECK(r0.margin == doctest::Approx(0.0));

  SdpProblem p1 = scalar_lower_bound();
  Vector half = Vector::Constant(1, 0.5);
  auto r1 = check_point(p1, half);
  CHECK_FALSE(r1.feasible);
  CHECK(r1.margin == doctest::Approx(-0.5));
}

TEST_CASE("optimal points re-check as feasible") {
  for (auto* make : {scalar_lower_bound, brl_first_order}) {
    SdpProblem p = make();
    auto sol = solve(p);
    REQUIRE(sol.status == SolveStatus::Optimal);
    auto chk = check_point(p, sol.values);
    CHECK(chk.margin >= -10.0 * SolverOptions{}.feasibility_tol);
    CHECK(chk.feasible);
  }
}

TEST_CASE("transposing every matrix leaves results unchanged") {
  SdpProblem p = brl_first_order();
  SdpProblem pt = p;
  for (auto& block : pt.blocks) {
    block.constant.transposeInPlace();
    for (auto& [var, coeff] : block.coeffs) coeff.transposeInPlace();
  }
  auto a = solve(p);
  auto b = solve(pt);
  REQUIRE(a.status == SolveStatus::Optimal);
  REQUIRE(b.status == SolveStatus::Optimal);
  CHECK(a.objective_value == doctest::Approx(b.objective_value).epsilon(1e-9));
}

TEST_CASE("objective scaling moves the value, not the argmin") {
  SdpProblem p = brl_first_order();
  auto base = solve(p);
  p.objective *= 7.5;
  auto scaled = solve(p);
  REQUIRE(base.status == SolveStatus::Optimal);
  REQUIRE(scaled.status == SolveStatus::Optimal);
  CHECK(scaled.objective_value ==
        doctest::Approx(7.5 * base.objective_value).epsilon(1e-6));
  CHECK(scaled.values(0) == doctest::Approx(base.values(0)).epsilon(1e-5));
}

TEST_CASE("feasibility solve separates the two verdicts") {
  SdpProblem feasible = scalar_lower_bound();
  auto f = solve_feasibility(feasible);
  REQUIRE(f.status == SolveStatus::Optimal);
  CHECK(f.objective_value <= 0.0);

  SdpProblem infeasible;
  infeasible.n_vars = 1;
  infeasible.objective = Vector::Zero(1);
  infeasible.blocks.push_back(scalar_block(0, 1.0, -1.0));
  infeasible.blocks.push_back(scalar_block(0, -1.0, 0.0));
  auto i = solve_feasibility(infeasible);
  REQUIRE(i.status == SolveStatus::Optimal);
  CHECK(i.objective_value > 1e-6);
  // the best slack is exactly 1/2 here
  CHECK(i.objective_value == doctest::Approx(0.5).epsilon(1e-5));
}

TEST_CASE("strict blocks keep an interior margin") {
  SdpProblem p;
  p.n_vars = 1;
  p.objective = Vector::Ones(1);
  LmiBlock b = scalar_block(0, 1.0, 0.0); // x > 0 strictly
  b.strict_ineq = true;
  p.blocks.push_back(b);
  auto sol = solve(p);
  REQUIRE(sol.status == SolveStatus::Optimal);
  CHECK(sol.values(0) > 0.0);
  CHECK(sol.values(0) == doctest::Approx(b.strictness_margin()).epsilon(1e-3));
}

TEST_CASE("json round trip preserves the problem") {
  SdpProblem p = brl_first_order();
  p.var_names = {"g2", "q"};
  p.blocks[0].strict_ineq = true;
  p.blocks[0].margin = 1e-6;
  std::string text = to_json(p);
  SdpProblem q = problem_from_json(text);
  CHECK(q.n_vars == p.n_vars);
  CHECK(q.var_names == p.var_names);
  REQUIRE(q.blocks.size() == p.blocks.size());
  for (std::size_t i = 0; i < p.blocks.size(); ++i) {
    CHECK(q.blocks[i].dim == p.blocks[i].dim);
    CHECK(q.blocks[i].sense == p.blocks[i].sense);
    CHECK(q.blocks[i].strict_ineq == p.blocks[i].strict_ineq);
    CHECK((q.blocks[i].constant - p.blocks[i].constant).norm() == 0.0);
  }
  auto a = solve(p);
  auto b = solve(q);
  CHECK(a.objective_value == doctest::Approx(b.objective_value).epsilon(1e-12));
}

TEST_CASE("malformed problems are rejected") {
  SdpProblem p;
  p.n_vars = 1;
  p.objective = Vector::Zero(2); // wrong length
  p.blocks.push_back(scalar_block(0, 1.0, 0.0));
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);

  SdpProblem q;
  q.n_vars = 1;
  q.objective = Vector::Zero(1);
  LmiBlock asymmetric;
  asymmetric.dim = 2;
  asymmetric.constant = Matrix::Zero(2, 2);
  asymmetric.constant(0, 1) = 1.0; // not symmetric
  q.blocks.push_back(asymmetric);
  CHECK_THROWS_AS(q.validate(), std::invalid_argument);
}

TEST_CASE("random two-variable programs agree with a grid oracle") {
  // min x0 + 0.3 x1 over an intersection of scalar constraints; the
  // optimum is checked against brute-force grid enumeration
  SdpProblem p;
  p.n_vars = 2;
  p.objective = Vector(2);
  p.objective << 1.0, 0.3;
  p.blocks.push_back(scalar_block(0, 1.0, 2.0));   // x0 >= -2
  p.blocks.push_back(scalar_block(1, 1.0, 1.0));   // x1 >= -1
  LmiBlock mix;
  mix.dim = 1;
  mix.constant = Matrix::Constant(1, 1, 4.0); // x0 + 2 x1 + 4 >= 0
  mix.coeffs.emplace_back(0, Matrix::Constant(1, 1, 1.0));
  mix.coeffs.emplace_back(1, Matrix::Constant(1, 1, 2.0));
  p.blocks.push_back(mix);

  auto sol = solve(p);
  REQUIRE(sol.status == SolveStatus::Optimal);

  double best = 1e30;
  for (double x0 = -2.0; x0 <= 2.0; x0 += 1e-3) {
    double x1 = std::max(-1.0, -(x0 + 4.0) / 2.0);
    (void)x1;
    double lo1 = std::max(-1.0, -(4.0 + x0) / 2.0);
    best = std::min(best, x0 + 0.3 * lo1);
  }
  CHECK(sol.objective_value == doctest::Approx(best).epsilon(1e-3));
}
